use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{DspError, Matrix};
use crate::SAMPLE_RATE_HZ;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    Hamming,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub window_len_ms: f64,
    pub hop_ms: f64,
    pub window: Window,
}

impl StftConfig {
    pub fn hamming(window_len_ms: f64, hop_ms: f64) -> Self {
        Self { window_len_ms, hop_ms, window: Window::Hamming }
    }

    pub fn validate(&self) -> Result<(), DspError> {
        if !(self.hop_ms > 0.0 && self.hop_ms <= self.window_len_ms) {
            return Err(DspError::InvalidConfig(format!(
                "hop {} ms must lie in (0, window {} ms]",
                self.hop_ms, self.window_len_ms
            )));
        }
        if self.window_samples() < 2 || self.hop_samples() < 1 {
            return Err(DspError::InvalidConfig(format!("window of {} ms is under 2 samples", self.window_len_ms)));
        }
        Ok(())
    }

    pub fn window_samples(&self) -> usize {
        ms_to_samples(self.window_len_ms)
    }

    pub fn hop_samples(&self) -> usize {
        ms_to_samples(self.hop_ms)
    }

    /// Next power of two at or above the window length.
    pub fn fft_size(&self) -> usize {
        self.window_samples().next_power_of_two()
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size() / 2 + 1
    }
}

pub fn ms_to_samples(ms: f64) -> usize {
    (ms * f64::from(SAMPLE_RATE_HZ) / 1000.0).round() as usize
}

/// Number of full frames; partial edge frames are dropped.
pub fn frame_count(len: usize, win: usize, hop: usize) -> usize {
    if len < win {
        0
    } else {
        (len - win) / hop + 1
    }
}

/// Symmetric Hamming window, `0.54 - 0.46 cos(2 pi n / (N - 1))`.
pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len).map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos()).collect()
}

/// One-sided STFT magnitudes, `n_frames x (fft_size / 2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Matrix,
    pub bin_hz: f64,
    pub hop_s: f64,
    pub window_s: f64,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.magnitudes.rows()
    }

    pub fn n_bins(&self) -> usize {
        self.magnitudes.cols()
    }

    pub fn frame_start_s(&self, i: usize) -> f64 {
        i as f64 * self.hop_s
    }

    pub fn frame_times(&self) -> Vec<f64> {
        (0..self.n_frames()).map(|i| self.frame_start_s(i)).collect()
    }

    /// Squared magnitudes with the same framing metadata.
    pub fn to_power(&self) -> Spectrogram {
        Spectrogram { magnitudes: self.magnitudes.map(|m| m * m), ..self.clone() }
    }
}

pub fn stft_magnitude(samples: &[f64], cfg: &StftConfig) -> Result<Spectrogram, DspError> {
    cfg.validate()?;
    let win = cfg.window_samples();
    let hop = cfg.hop_samples();
    let n_frames = frame_count(samples.len(), win, hop);
    if n_frames == 0 {
        return Err(DspError::TooShort { needed: win, got: samples.len() });
    }
    let n_fft = cfg.fft_size();
    let n_bins = n_fft / 2 + 1;
    let window = match cfg.window {
        Window::Hamming => hamming(win),
    };
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut out = Matrix::zeros(n_frames, n_bins);
    for f in 0..n_frames {
        let frame = &samples[f * hop..f * hop + win];
        for (b, (&x, &w)) in buf.iter_mut().zip(frame.iter().zip(&window)) {
            *b = Complex::new(x * w, 0.0);
        }
        buf[win..].iter_mut().for_each(|b| *b = Complex::new(0.0, 0.0));
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (o, c) in out.row_mut(f).iter_mut().zip(&buf[..n_bins]) {
            *o = c.norm();
        }
    }
    let sr = f64::from(SAMPLE_RATE_HZ);
    Ok(Spectrogram { magnitudes: out, bin_hz: sr / n_fft as f64, hop_s: hop as f64 / sr, window_s: win as f64 / sr })
}
