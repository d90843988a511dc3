use super::{DspError, Matrix, Spectrogram};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with centres equally spaced on the Mel scale.
///
/// Weights are unnormalised (peak 1.0) and evaluated at the exact bin
/// frequencies, so very narrow low-frequency filters can fall between bins
/// and come out empty.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Matrix,
    edges_hz: Vec<f64>,
    /// Per filter, the bin range holding its non-zero weights.
    support: Vec<(usize, usize)>,
}

impl MelFilterbank {
    pub fn new(n_bins: usize, bin_hz: f64, n_mels: usize, fmin: f64, fmax: f64) -> Result<Self, DspError> {
        if n_mels == 0 {
            return Err(DspError::NoFilters { requested: n_mels });
        }
        let nyquist = bin_hz * (n_bins.saturating_sub(1)) as f64;
        if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist + 1e-9) {
            return Err(DspError::InvalidFrequencyRange { fmin, fmax, nyquist });
        }
        let (mlo, mhi) = (hz_to_mel(fmin), hz_to_mel(fmax));
        let step = (mhi - mlo) / (n_mels + 1) as f64;
        let edges_hz: Vec<f64> = (0..n_mels + 2).map(|i| mel_to_hz(mlo + step * i as f64)).collect();
        let mut weights = Matrix::zeros(n_mels, n_bins);
        for m in 0..n_mels {
            let (lo, c, hi) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
            for (k, w) in weights.row_mut(m).iter_mut().enumerate() {
                let f = k as f64 * bin_hz;
                *w = if f > lo && f <= c {
                    (f - lo) / (c - lo)
                } else if f > c && f < hi {
                    (hi - f) / (hi - c)
                } else {
                    0.0
                };
            }
        }
        let support = (0..n_mels)
            .map(|m| {
                let row = weights.row(m);
                match row.iter().position(|&w| w != 0.0) {
                    Some(a) => (a, row.iter().rposition(|&w| w != 0.0).map_or(a, |b| b + 1)),
                    None => (0, 0),
                }
            })
            .collect();
        Ok(Self { weights, edges_hz, support })
    }

    pub fn n_mels(&self) -> usize {
        self.weights.rows()
    }

    /// Filter `m` weights over all spectrum bins.
    pub fn filter(&self, m: usize) -> &[f64] {
        self.weights.row(m)
    }

    /// The `n_mels + 2` edge frequencies (lower edge, centres, upper edge).
    pub fn edges_hz(&self) -> &[f64] {
        &self.edges_hz
    }

    /// Filter-weighted sums of each row of `frames` (`n_frames x n_bins`).
    pub fn apply(&self, frames: &Matrix) -> Matrix {
        assert_eq!(frames.cols(), self.weights.cols(), "bin count mismatch");
        let mut out = Matrix::zeros(frames.rows(), self.n_mels());
        for (t, frame) in frames.iter_rows().enumerate() {
            let dst = out.row_mut(t);
            for (m, d) in dst.iter_mut().enumerate() {
                let (a, b) = self.support[m];
                *d = self.weights.row(m)[a..b].iter().zip(&frame[a..b]).map(|(w, x)| w * x).sum();
            }
        }
        out
    }
}

pub fn mel_filterbank(spec: &Spectrogram, n_mels: usize, fmin: f64, fmax: f64) -> Result<Matrix, DspError> {
    let bank = MelFilterbank::new(spec.n_bins(), spec.bin_hz, n_mels, fmin, fmax)?;
    Ok(bank.apply(&spec.magnitudes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{stft_magnitude, StftConfig};

    fn flat_spectrogram(n_frames: usize) -> Spectrogram {
        Spectrogram {
            magnitudes: Matrix::from_vec(n_frames, 257, vec![1.0; n_frames * 257]),
            bin_hz: 31.25,
            hop_s: 0.016,
            window_s: 0.032,
        }
    }

    #[test]
    fn mel_scale_round_trip() {
        for hz in [0.0, 100.0, 1000.0, 7999.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_spectrogram_gives_zero_mel() {
        let spec = stft_magnitude(&vec![0.0; 8000], &StftConfig::hamming(32.0, 16.0)).unwrap();
        let mel = mel_filterbank(&spec, 126, 0.0, 8000.0).unwrap();
        assert_eq!(mel.cols(), 126);
        assert!(mel.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flat_frame_gives_weight_sums() {
        let spec = flat_spectrogram(3);
        let bank = MelFilterbank::new(257, 31.25, 40, 0.0, 8000.0).unwrap();
        let mel = bank.apply(&spec.magnitudes);
        for m in 0..40 {
            // independent: sum the triangle directly at bin frequencies
            let e = bank.edges_hz();
            let expected: f64 = (0..257)
                .map(|k| {
                    let f = k as f64 * 31.25;
                    let rise = (f - e[m]) / (e[m + 1] - e[m]);
                    let fall = (e[m + 2] - f) / (e[m + 2] - e[m + 1]);
                    rise.min(fall).max(0.0)
                })
                .sum();
            for t in 0..3 {
                assert!((mel.get(t, m) - expected).abs() < 1e-9, "filter {m}");
            }
        }
    }

    #[test]
    fn rows_nonnegative_and_interior_bins_covered() {
        for &(n_mels, fmin, fmax) in &[(126usize, 0.0, 8000.0), (26, 0.0, 8000.0), (40, 300.0, 4000.0)] {
            let bank = MelFilterbank::new(257, 31.25, n_mels, fmin, fmax).unwrap();
            for m in 0..n_mels {
                assert!(bank.filter(m).iter().all(|&w| w >= 0.0));
            }
            for k in 0..257 {
                let f = k as f64 * 31.25;
                if f > fmin && f < fmax {
                    assert!((0..n_mels).any(|m| bank.filter(m)[k] > 0.0), "bin {k} uncovered");
                }
            }
        }
    }

    #[test]
    fn invalid_ranges() {
        assert!(MelFilterbank::new(257, 31.25, 26, 4000.0, 1000.0).is_err());
        assert!(MelFilterbank::new(257, 31.25, 26, 0.0, 9000.0).is_err());
        assert!(MelFilterbank::new(257, 31.25, 26, -1.0, 8000.0).is_err());
        assert!(MelFilterbank::new(257, 31.25, 0, 0.0, 8000.0).is_err());
    }
}
