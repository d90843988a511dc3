use serde::{Deserialize, Serialize};

use super::DspError;

/// Population moments; kurtosis is non-excess (Gaussian gives 3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl Moments {
    pub fn to_array(self) -> [f64; 4] {
        [self.mean, self.variance, self.skewness, self.kurtosis]
    }
}

/// Variance below this makes skewness and kurtosis 0.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

pub fn moment_stats(series: &[f64]) -> Result<Moments, DspError> {
    if series.len() < 2 {
        return Err(DspError::TooShort { needed: 2, got: series.len() });
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in series {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, kurtosis) = if m2 < DEGENERATE_VARIANCE { (0.0, 0.0) } else { (m3 / m2.powf(1.5), m4 / (m2 * m2)) };
    Ok(Moments { mean, variance: m2, skewness, kurtosis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_series_is_degenerate() {
        let m = moment_stats(&[1.0; 4]).unwrap();
        assert_eq!(m.to_array(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn symmetric_series_has_no_skew() {
        let s: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let m = moment_stats(&s).unwrap();
        assert_eq!(m.skewness, 0.0);
        assert!((m.kurtosis - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_kurtosis_near_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let s: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = moment_stats(&s).unwrap();
        assert!((m.kurtosis - 3.0).abs() < 0.15, "kurtosis {}", m.kurtosis);
    }

    #[test]
    fn too_short() {
        assert!(moment_stats(&[1.0]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn permutation_invariant(mut v in proptest::collection::vec(-10.0f64..10.0, 2..64), seed in 0u64..1000) {
            let a = moment_stats(&v).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::SliceRandom::shuffle(v.as_mut_slice(), &mut rng);
            let b = moment_stats(&v).unwrap();
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                proptest::prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }
    }
}
