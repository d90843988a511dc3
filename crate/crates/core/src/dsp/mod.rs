//! Signal-processing kernels shared by the feature extractors.
//!
//! Everything here is a pure function of its inputs: framing and Hamming
//! windowing, one-sided STFT magnitudes, triangular Mel filterbanks, the
//! orthonormal DCT-II and the four central moments used as functionals.

mod dct;
mod matrix;
mod mel;
mod moments;
mod stft;

pub use dct::{dct_ii_matrix, dct_ii_orthonormal};
pub use matrix::Matrix;
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, MelFilterbank};
pub use moments::{moment_stats, Moments};
pub use stft::{frame_count, hamming, ms_to_samples, stft_magnitude, Spectrogram, StftConfig, Window};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("signal of {got} samples is shorter than the required {needed}")]
    TooShort { needed: usize, got: usize },
    #[error("invalid STFT configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid Mel frequency range [{fmin}, {fmax}] Hz (Nyquist {nyquist} Hz)")]
    InvalidFrequencyRange { fmin: f64, fmax: f64, nyquist: f64 },
    #[error("requested {requested} filters, need at least one")]
    NoFilters { requested: usize },
    #[error("requested {requested} DCT coefficients from a length-{available} input")]
    TooManyCoefficients { requested: usize, available: usize },
}
