use serde::{Deserialize, Serialize};

use super::mfcc::LOG_OFFSET;
use super::FeatureError;
use crate::dsp::{mel_filterbank, stft_magnitude, Matrix, StftConfig};

pub const N_MEL_BANDS: usize = 126;
pub const SEGMENT_SAMPLES: usize = 8000;
pub const SEGMENT_SHIFT_SAMPLES: usize = 4000;

fn mel_config() -> StftConfig {
    StftConfig::hamming(32.0, 4.0)
}

/// Mel power of one 500 ms window, `[frames x 126]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelSegment {
    pub source_id: String,
    pub index: usize,
    pub mel: Matrix,
}

impl MelSegment {
    pub fn n_frames(&self) -> usize {
        self.mel.rows()
    }

    pub fn n_bands(&self) -> usize {
        self.mel.cols()
    }

    pub fn log_mel(&self) -> Matrix {
        self.mel.map(|x| (x + LOG_OFFSET).ln())
    }

    /// Time average of the log-Mel matrix.
    pub fn pooled(&self) -> Vec<f64> {
        self.log_mel().column_means()
    }
}

fn mel_power(signal: &[f64]) -> Result<Matrix, FeatureError> {
    let power = stft_magnitude(signal, &mel_config())?.to_power();
    Ok(mel_filterbank(&power, N_MEL_BANDS, 0.0, 8000.0)?)
}

/// 500 ms windows every 250 ms. A non-empty signal shorter than one window
/// is zero-padded into a single segment.
pub fn mel_segments(signal: &[f64], source_id: &str) -> Result<Vec<MelSegment>, FeatureError> {
    if signal.is_empty() {
        return Err(FeatureError::EmptySignal);
    }
    let segment = |index: usize, samples: &[f64]| -> Result<MelSegment, FeatureError> {
        Ok(MelSegment { source_id: source_id.to_string(), index, mel: mel_power(samples)? })
    };
    if signal.len() < SEGMENT_SAMPLES {
        let mut padded = signal.to_vec();
        padded.resize(SEGMENT_SAMPLES, 0.0);
        return Ok(vec![segment(0, &padded)?]);
    }
    let count = (signal.len() - SEGMENT_SAMPLES) / SEGMENT_SHIFT_SAMPLES + 1;
    (0..count)
        .map(|j| {
            let start = j * SEGMENT_SHIFT_SAMPLES;
            segment(j, &signal[start..start + SEGMENT_SAMPLES])
        })
        .collect()
}

/// Time average of the whole signal's log-Mel spectrogram.
pub fn mel_pooled(signal: &[f64]) -> Result<Vec<f64>, FeatureError> {
    let win = mel_config().window_samples();
    if signal.len() < win {
        return Err(FeatureError::TooShort { needed: win, got: signal.len() });
    }
    Ok(mel_power(signal)?.map(|x| (x + LOG_OFFSET).ln()).column_means())
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
    fn segment_counts() {
        assert_eq!(mel_segments(&white(8000, 1), "u").unwrap().len(), 1);
        let s = mel_segments(&white(16000, 1), "u").unwrap();
        assert_eq!(s.len(), (16000 - 8000) / 4000 + 1);
        assert_eq!(s.iter().map(|m| m.index).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(mel_segments(&white(11999, 1), "u").unwrap().len(), 1);
    }

    #[test]
    fn segment_shape() {
        let s = &mel_segments(&white(8000, 2), "u").unwrap()[0];
        assert_eq!(s.n_bands(), 126);
        assert_eq!(s.n_frames(), (8000 - 512) / 64 + 1);
        assert!(s.mel.as_slice().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn short_signal_is_padded() {
        let x = white(3000, 3);
        let s = mel_segments(&x, "u").unwrap();
        assert_eq!(s.len(), 1);
        let mut padded = x.clone();
        padded.resize(8000, 0.0);
        assert_eq!(s[0], mel_segments(&padded, "u").unwrap()[0]);
    }

    #[test]
    fn second_segment_matches_offset_window() {
        let x = white(16000, 4);
        let s = mel_segments(&x, "u").unwrap();
        let direct = mel_segments(&x[4000..12000], "u").unwrap();
        assert_eq!(s[1].mel, direct[0].mel);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(mel_segments(&[], "u"), Err(FeatureError::EmptySignal)));
    }

    #[test]
    fn pooled_silence() {
        let p = mel_pooled(&vec![0.0; 4000]).unwrap();
        assert_eq!(p.len(), 126);
        let expected = LOG_OFFSET.ln();
        assert!(p.iter().all(|&v| (v - expected).abs() < 1e-12));
    }

    #[test]
    fn pooled_halves_agree_on_stationary_noise() {
        let x = white(16000 * 10, 5);
        let (a, b) = x.split_at(x.len() / 2);
        let (pa, pb) = (mel_pooled(a).unwrap(), mel_pooled(b).unwrap());
        for (m, (u, v)) in pa.iter().zip(&pb).enumerate() {
            assert!((u - v).abs() < 0.5, "band {m}: {u} vs {v}");
        }
    }

    #[test]
    fn pooled_too_short() {
        assert!(mel_pooled(&[0.0; 100]).is_err());
    }
}
