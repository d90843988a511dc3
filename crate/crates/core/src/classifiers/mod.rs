//! RBF-kernel SVM trained by SMO and a one-hidden-layer MLP.

mod mlp;
mod svm;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mlp::{mlp_predict, mlp_train, EpochRecord, MlpGradients, MlpModel, MlpParams, MlpTraining, HIDDEN_UNITS, N_CLASSES};
pub use svm::{
    grid_search_svm, rbf, svm_predict, svm_train, svm_train_with_distances, GridCell, GridSearchResult, SquaredDistances,
    SvmGrid, SvmModel, SvmParams, DEFAULT_TOL, GRID_C, GRID_GAMMA,
};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("non-finite feature value in sample {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("{samples} samples but {labels} labels")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("invalid label {0}")]
    InvalidLabel(i64),
    #[error("SVM grid has no (C, gamma) combinations")]
    EmptyGrid,
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("model file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("model file {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("model file {path}: unsupported format {format:?} version {version}")]
    UnsupportedFormat { path: String, format: String, version: u32 },
}

impl PartialEq for ClassifierError {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

pub(crate) fn check_rows(x: &[Vec<f64>], min: usize) -> Result<(), ClassifierError> {
    if x.len() < min {
        return Err(ClassifierError::TooFewSamples { needed: min, got: x.len() });
    }
    let d = x[0].len();
    for (i, r) in x.iter().enumerate() {
        if r.len() != d {
            return Err(ClassifierError::DimMismatch { expected: d, got: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFinite(i));
        }
    }
    Ok(())
}

pub const MODEL_FORMAT: &str = "recbias-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Model {
    Svm(SvmModel),
    Mlp(MlpModel),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: Model,
}

pub fn save_model(path: &Path, model: &Model) -> Result<(), ClassifierError> {
    let p = path.display().to_string();
    let file = ModelFile { format: MODEL_FORMAT.to_string(), version: MODEL_VERSION, model: model.clone() };
    let text = serde_json::to_string(&file).map_err(|source| ClassifierError::Json { path: p.clone(), source })?;
    std::fs::write(path, text).map_err(|source| ClassifierError::Io { path: p, source })
}

pub fn load_model(path: &Path) -> Result<Model, ClassifierError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ClassifierError::Io { path: p.clone(), source })?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|source| ClassifierError::Json { path: p.clone(), source })?;
    if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
        return Err(ClassifierError::UnsupportedFormat { path: p, format: file.format, version: file.version });
    }
    Ok(file.model)
}
