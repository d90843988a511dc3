//! Speech / non-speech segmentation and utterance-level SNR estimation.
//!
//! Both operate on 32 ms frames with a 16 ms hop; frames that would run
//! past either end of the utterance are dropped rather than zero-padded.

mod snr;
mod vad;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use snr::{estimate_utterance_snr, SnrEstimate, SNR_CEIL_DB, SNR_FLOOR_DB};
pub use vad::{detect_segments, split_utterance, VadConfig};

use crate::SAMPLE_RATE_HZ;

pub const FRAME_SAMPLES: usize = 512;
pub const HOP_SAMPLES: usize = 256;
/// 64 ms: the shortest utterance either estimator accepts.
pub const MIN_UTTERANCE_SAMPLES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentLabel {
    Speech,
    Nonspeech,
}

/// A labelled interval; one utterance's spans tile `[0, duration]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpan {
    pub label: SegmentLabel,
    pub start_s: f64,
    pub end_s: f64,
}

impl SegmentSpan {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn start_sample(&self) -> usize {
        seconds_to_sample(self.start_s)
    }

    pub fn end_sample(&self) -> usize {
        seconds_to_sample(self.end_s)
    }
}

fn seconds_to_sample(t: f64) -> usize {
    (t * f64::from(SAMPLE_RATE_HZ)).round().max(0.0) as usize
}

/// One row of the segment dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub utterance_id: String,
    pub label: SegmentLabel,
    pub start_s: f64,
    pub end_s: f64,
}

impl SegmentRecord {
    pub fn from_spans(utterance_id: &str, spans: &[SegmentSpan]) -> Vec<SegmentRecord> {
        spans
            .iter()
            .map(|s| SegmentRecord { utterance_id: utterance_id.to_string(), label: s.label, start_s: s.start_s, end_s: s.end_s })
            .collect()
    }
}

/// JSON array of segment records.
pub fn write_segments_json<W: std::io::Write>(out: W, records: &[SegmentRecord]) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(out, records)
}

/// One row of the per-utterance SNR table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrRecord {
    pub utterance_id: String,
    pub speaker_id: String,
    pub group: crate::corpus::Group,
    pub snr_db: f64,
    pub n_noise_frames: usize,
    pub n_active_frames: usize,
}

pub fn write_snr_csv<W: std::io::Write>(out: W, records: &[SnrRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentError {
    #[error("utterance {utterance_id:?} has {samples} samples, need at least {MIN_UTTERANCE_SAMPLES} (64 ms)")]
    TooShort { utterance_id: String, samples: usize },
    #[error("span [{start_s}, {end_s}] s is outside utterance of {duration_s} s or out of order")]
    SpanOutOfBounds { start_s: f64, end_s: f64, duration_s: f64 },
}

/// Mean-square power of each full 32 ms frame.
pub(crate) fn frame_powers(samples: &[f64]) -> Vec<f64> {
    let n = crate::dsp::frame_count(samples.len(), FRAME_SAMPLES, HOP_SAMPLES);
    (0..n)
        .map(|k| {
            let f = &samples[k * HOP_SAMPLES..k * HOP_SAMPLES + FRAME_SAMPLES];
            f.iter().map(|x| x * x).sum::<f64>() / FRAME_SAMPLES as f64
        })
        .collect()
}
