use serde::{Deserialize, Serialize};

use super::{frame_powers, SegmentError, MIN_UTTERANCE_SAMPLES};
use crate::corpus::Utterance;

pub const SNR_FLOOR_DB: f64 = -20.0;
pub const SNR_CEIL_DB: f64 = 60.0;
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub snr_db: f64,
    pub n_noise_frames: usize,
    pub n_active_frames: usize,
}

/// Percentile noise-floor SNR.
///
/// Noise power is the mean power of the quietest fifth of the frames;
/// active power is the mean over frames louder than twice the noise power.
/// When no frame clears that bar, the loudest fifth is used instead. The
/// result is `10 log10((P_active - P_noise) / P_noise)` clamped to
/// [-20, 60] dB.
pub fn estimate_utterance_snr(utt: &Utterance) -> Result<SnrEstimate, SegmentError> {
    if utt.samples.len() < MIN_UTTERANCE_SAMPLES {
        return Err(SegmentError::TooShort { utterance_id: utt.utterance_id.clone(), samples: utt.samples.len() });
    }
    let powers = frame_powers(&utt.samples);
    let mut sorted = powers.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let q = ((n as f64 * 0.2).ceil() as usize).max(1);
    let noise = sorted[..q].iter().sum::<f64>() / q as f64;

    if sorted[n - 1] == 0.0 {
        return Ok(SnrEstimate { snr_db: SNR_FLOOR_DB, n_noise_frames: q, n_active_frames: 0 });
    }
    let loud: Vec<f64> = powers.iter().copied().filter(|&p| p > 2.0 * noise).collect();
    let (active, n_active) = if loud.is_empty() {
        (sorted[n - q..].iter().sum::<f64>() / q as f64, q)
    } else {
        (loud.iter().sum::<f64>() / loud.len() as f64, loud.len())
    };
    let snr_db = if noise == 0.0 {
        SNR_CEIL_DB
    } else {
        (10.0 * ((active - noise).max(EPS) / noise).log10()).clamp(SNR_FLOOR_DB, SNR_CEIL_DB)
    };
    Ok(SnrEstimate { snr_db, n_noise_frames: q, n_active_frames: n_active })
}
