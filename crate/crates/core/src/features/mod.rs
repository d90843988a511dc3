//! Handcrafted utterance representations and the fitted transforms that
//! sit between them and the classifiers.

mod mel;
mod mfcc;
mod pca;
mod sparsity;
pub mod special;
mod standardize;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::DspError;

pub use mel::{mel_pooled, mel_segments, MelSegment, N_MEL_BANDS, SEGMENT_SAMPLES, SEGMENT_SHIFT_SAMPLES};
pub use mfcc::{mfcc_frames, mfcc_stats, MFCC_DIM, MIN_MFCC_SAMPLES, N_CEPSTRA, N_MFCC_FILTERS};
pub use pca::{retained_dimension, Pca, DEFAULT_VARIANCE_RATIO};
pub use sparsity::{gamma_shape_mle, sparsity_features, SHAPE_CAP, SHAPE_MIN};
pub use standardize::{Standardizer, STD_FLOOR};

pub const SPARSITY_DIM: usize = 129;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("signal has {got} samples, need at least {needed}")]
    TooShort { needed: usize, got: usize },
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("need at least {needed} vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },
    #[error("empty signal")]
    EmptySignal,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("{kind} features of {source_id:?} contain non-finite values")]
    NonFinite { kind: FeatureKind, source_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    MfccStats,
    Sparsity,
    MelPooled,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::MfccStats => "mfcc_stats",
            FeatureKind::Sparsity => "sparsity",
            FeatureKind::MelPooled => "mel_pooled",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            FeatureKind::MfccStats => MFCC_DIM,
            FeatureKind::Sparsity => SPARSITY_DIM,
            FeatureKind::MelPooled => N_MEL_BANDS,
        }
    }

    pub fn extract(self, signal: &[f64]) -> Result<Vec<f64>, FeatureError> {
        match self {
            FeatureKind::MfccStats => mfcc_stats(signal),
            FeatureKind::Sparsity => sparsity_features(signal),
            FeatureKind::MelPooled => mel_pooled(signal),
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub kind: FeatureKind,
    pub values: Vec<f64>,
    pub source_id: String,
    pub speaker_id: String,
}

impl FeatureVector {
    pub fn extract(kind: FeatureKind, signal: &[f64], source_id: &str, speaker_id: &str) -> Result<Self, FeatureError> {
        let values = kind.extract(signal)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite { kind, source_id: source_id.to_string() });
        }
        Ok(Self { kind, values, source_id: source_id.to_string(), speaker_id: speaker_id.to_string() })
    }
}

pub fn fit_standardizer(train: &[FeatureVector]) -> Result<Standardizer, FeatureError> {
    let rows: Vec<&[f64]> = train.iter().map(|v| v.values.as_slice()).collect();
    Standardizer::fit(&rows)
}

pub fn fit_pca_95(train: &[FeatureVector]) -> Result<Pca, FeatureError> {
    let rows: Vec<&[f64]> = train.iter().map(|v| v.values.as_slice()).collect();
    Pca::fit(&rows, DEFAULT_VARIANCE_RATIO)
}

/// `source_id,speaker_id,kind,v0,v1,...`; the header is sized to the widest row.
pub fn write_features_csv<W: Write>(out: W, rows: &[FeatureVector]) -> csv::Result<()> {
    let width = rows.iter().map(|r| r.values.len()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header = vec!["source_id".to_string(), "speaker_id".to_string(), "kind".to_string()];
    header.extend((0..width).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.source_id.clone(), r.speaker_id.clone(), r.kind.to_string()];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
