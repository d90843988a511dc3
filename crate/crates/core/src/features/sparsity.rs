use super::special::{digamma, trigamma};
use super::FeatureError;
use crate::dsp::{stft_magnitude, StftConfig};

pub const SHAPE_CAP: f64 = 1e4;
pub const SHAPE_MIN: f64 = 1e-3;
const POWER_FLOOR: f64 = 1e-12;
const MIN_VALUES: usize = 8;
const MAX_NEWTON: usize = 50;
const NEWTON_TOL: f64 = 1e-8;

/// Maximum-likelihood Gamma shape for a set of powers (squared Chi
/// magnitudes), started from the Greenwood-Durand style closed form and
/// refined by Newton's method on `ln k − ψ(k) = s`.
pub fn gamma_shape_mle(powers: &[f64]) -> Result<f64, FeatureError> {
    if powers.len() < MIN_VALUES {
        return Err(FeatureError::TooFewValues { needed: MIN_VALUES, got: powers.len() });
    }
    let n = powers.len() as f64;
    let (mut sum, mut sum_ln) = (0.0, 0.0);
    for &p in powers {
        let p = p.max(POWER_FLOOR);
        sum += p;
        sum_ln += p.ln();
    }
    let s = (sum / n).ln() - sum_ln / n;
    if s < 1e-10 {
        return Ok(SHAPE_CAP);
    }
    let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..MAX_NEWTON {
        let f = k.ln() - digamma(k) - s;
        let df = 1.0 / k - trigamma(k);
        let mut next = k - f / df;
        if next <= 0.0 {
            next = k / 2.0;
        }
        next = next.clamp(SHAPE_MIN, SHAPE_CAP);
        let step = (next - k).abs();
        k = next;
        if step < NEWTON_TOL {
            break;
        }
    }
    Ok(k.clamp(SHAPE_MIN, SHAPE_CAP))
}

/// Per-bin Gamma shape of the 16 ms / 8 ms STFT power.
pub fn sparsity_features(signal: &[f64]) -> Result<Vec<f64>, FeatureError> {
    let spec = stft_magnitude(signal, &StftConfig::hamming(16.0, 8.0))?.to_power();
    let (frames, bins) = (spec.n_frames(), spec.n_bins());
    let mut column = vec![0.0; frames];
    (0..bins)
        .map(|b| {
            for (f, c) in column.iter_mut().enumerate() {
                *c = spec.magnitudes.get(f, b);
            }
            gamma_shape_mle(&column)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma, Normal};

    fn gamma_sample(k: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Gamma::new(k, 2.5).unwrap();
        (0..n).map(|_| g.sample(&mut rng)).collect()
    }

    #[test]
    fn constant_hits_cap() {
        assert_eq!(gamma_shape_mle(&[0.7; 20]).unwrap(), SHAPE_CAP);
    }

    #[test]
    fn too_few_values() {
        assert!(matches!(gamma_shape_mle(&[1.0; 7]), Err(FeatureError::TooFewValues { got: 7, .. })));
    }

    #[test]
    fn rayleigh_powers_give_unit_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = Normal::new(0.0, 1.0).unwrap();
        let powers: Vec<f64> = (0..100_000)
            .map(|_| {
                let (re, im): (f64, f64) = (n.sample(&mut rng), n.sample(&mut rng));
                re * re + im * im
            })
            .collect();
        let k = gamma_shape_mle(&powers).unwrap();
        assert!((0.97..=1.03).contains(&k), "{k}");
    }

    #[test]
    fn recovers_known_shapes() {
        for (i, &k) in [1.0, 2.0, 5.0].iter().enumerate() {
            let est = gamma_shape_mle(&gamma_sample(k, 100_000, 40 + i as u64)).unwrap();
            assert!((est - k).abs() / k < 0.03, "k={k} est={est}");
        }
    }

    #[test]
    fn estimate_solves_likelihood_equation() {
        let p = gamma_sample(0.4, 5000, 3);
        let k = gamma_shape_mle(&p).unwrap();
        let n = p.len() as f64;
        let s = (p.iter().sum::<f64>() / n).ln() - p.iter().map(|v| v.ln()).sum::<f64>() / n;
        assert!((k.ln() - digamma(k) - s).abs() < 1e-9);
    }

    fn white(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, 0.1).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_bins_are_rayleigh() {
        let k = sparsity_features(&white(16000 * 20, 8)).unwrap();
        assert_eq!(k.len(), 129);
        // DC and Nyquist bins are real-valued, so their powers are chi-square
        // with one degree of freedom
        for (b, &v) in k.iter().enumerate().take(128).skip(1) {
            assert!((0.9..=1.1).contains(&v), "bin {b}: {v}");
        }
        for b in [0, 128] {
            assert!((0.45..=0.55).contains(&k[b]), "bin {b}: {}", k[b]);
        }
    }

    #[test]
    fn gain_invariant() {
        let x = white(16000, 2);
        let a = sparsity_features(&x).unwrap();
        let b = sparsity_features(&x.iter().map(|v| v * 37.0).collect::<Vec<_>>()).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-6);
        }
    }

    #[test]
    fn too_short_signal() {
        assert!(sparsity_features(&[0.1; 200]).is_err());
    }
}
