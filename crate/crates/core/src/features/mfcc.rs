use super::FeatureError;
use crate::dsp::{dct_ii_matrix, mel_filterbank, moment_stats, stft_magnitude, Matrix, StftConfig};

pub const N_MFCC_FILTERS: usize = 26;
pub const N_CEPSTRA: usize = 12;
pub const MFCC_DIM: usize = 4 * N_CEPSTRA;
/// 64 ms.
pub const MIN_MFCC_SAMPLES: usize = 1024;
pub(crate) const LOG_OFFSET: f64 = 1e-10;

/// Frame-level c1..c12 over 32 ms / 16 ms frames, one row per frame.
pub fn mfcc_frames(signal: &[f64]) -> Result<Matrix, FeatureError> {
    if signal.len() < MIN_MFCC_SAMPLES {
        return Err(FeatureError::TooShort { needed: MIN_MFCC_SAMPLES, got: signal.len() });
    }
    let power = stft_magnitude(signal, &StftConfig::hamming(32.0, 16.0))?.to_power();
    let mel = mel_filterbank(&power, N_MFCC_FILTERS, 0.0, 8000.0)?;
    let dct = dct_ii_matrix(N_MFCC_FILTERS, N_CEPSTRA + 1);
    let mut out = Matrix::zeros(mel.rows(), N_CEPSTRA);
    let mut logs = vec![0.0; N_MFCC_FILTERS];
    for (f, row) in mel.iter_rows().enumerate() {
        for (l, &e) in logs.iter_mut().zip(row) {
            *l = (e + LOG_OFFSET).ln();
        }
        for (c, dst) in out.row_mut(f).iter_mut().enumerate() {
            *dst = dct.row(c + 1).iter().zip(&logs).map(|(d, l)| d * l).sum();
        }
    }
    Ok(out)
}

/// Mean, variance, skewness and kurtosis of each of c1..c12, grouped by
/// coefficient.
pub fn mfcc_stats(signal: &[f64]) -> Result<Vec<f64>, FeatureError> {
    let frames = mfcc_frames(signal)?;
    let mut out = Vec::with_capacity(MFCC_DIM);
    let mut series = vec![0.0; frames.rows()];
    for c in 0..N_CEPSTRA {
        for (f, s) in series.iter_mut().enumerate() {
            *s = frames.get(f, c);
        }
        out.extend(moment_stats(&series)?.to_array());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn white(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, 0.05).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn dimension_is_48() {
        assert_eq!(mfcc_stats(&white(16000, 1)).unwrap().len(), 48);
    }

    #[test]
    fn gain_only_moves_c0() {
        let x = white(16000, 4);
        let a = mfcc_frames(&x).unwrap();
        let b = mfcc_frames(&x.iter().map(|v| v * 10.0).collect::<Vec<_>>()).unwrap();
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((p - q).abs() < 1e-6, "{p} vs {q}");
        }
    }

    #[test]
    fn stationary_noise_has_stable_cepstra() {
        let s = mfcc_stats(&white(16000 * 30, 6)).unwrap();
        let var: f64 = s.chunks(4).map(|c| c[1]).sum();
        let abs_mean: f64 = s.chunks(4).map(|c| c[0].abs()).sum();
        assert!(var / abs_mean < 1.0, "{var} / {abs_mean}");
    }

    #[test]
    fn too_short() {
        assert!(mfcc_stats(&white(500, 1)).is_err());
    }

    #[test]
    fn deterministic() {
        let x = white(8000, 9);
        let a = mfcc_stats(&x).unwrap();
        let b = mfcc_stats(&x).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
