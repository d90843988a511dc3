//! Leave-one-speaker-out audit protocol and report rendering.

mod config;
mod folds;
mod pipeline;
mod report;

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::ClassifierError;
use crate::corpus::{CorpusError, Group};
use crate::features::FeatureError;
use crate::segmentation::SegmentError;

pub use config::{AuditConfig, MlpSettings, CONFIG_KEYS, DEFAULT_SEEDS, DEFAULT_VAL_FRACTION};
pub use folds::{majority_vote, make_loso_folds, Fold, FoldItem};
pub use pipeline::{prepare_corpus, run_audit, run_condition, run_conditions, PreparedCorpus, PreparedUtterance};
pub use report::{
    compare_conditions, group_snr_stats, render_text, write_report, AuditFlags, AuditReport, ConditionResult,
    GroupSnrStats, SnrStats, SpeakerPrediction, BIAS_MARGIN, SNR_GAP_DB,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("need at least 3 speakers, got {got}")]
    TooFewSpeakers { got: usize },
    #[error("no speaker of group {0}")]
    MissingGroup(Group),
    #[error("item {0:?} refers to an unknown speaker")]
    UnknownSpeaker(String),
    #[error("speaker {speaker_id:?} has no usable {condition} material for {approach}")]
    NoUsableItems { speaker_id: String, condition: Condition, approach: Approach },
    #[error("{approach} features of {utterance_id:?} are not finite")]
    NonFiniteFeatures { utterance_id: String, approach: Approach },
    #[error("no utterances for group {0}")]
    EmptyGroup(Group),
    #[error("cannot vote on an empty prediction list")]
    EmptyVote,
    #[error("invalid class label {0}")]
    InvalidLabel(usize),
    #[error("approach {approach} lacks the {condition} condition")]
    MissingCondition { approach: Approach, condition: Condition },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
}

macro_rules! named_enum {
    ($name:ident { $($variant:ident => $token:literal),+ $(,)? }) => {
        impl $name {
            pub const ALL: [$name; [$($token),+].len()] = [$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $token),+ }
            }
        }

        impl FromStr for $name {
            type Err = EvalError;

            fn from_str(s: &str) -> Result<Self, EvalError> {
                match s {
                    $($token => Ok($name::$variant),)+
                    _ => Err(EvalError::Config(format!(concat!("unknown ", stringify!($name), " {:?}"), s))),
                }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    SvmMfcc,
    SvmSparsity,
    SvmPcaStack,
    MlpMel,
}

named_enum!(Approach { SvmMfcc => "svm_mfcc", SvmSparsity => "svm_sparsity", SvmPcaStack => "svm_pca_stack", MlpMel => "mlp_mel" });

impl Approach {
    pub fn is_svm(self) -> bool {
        !matches!(self, Approach::MlpMel)
    }
}

/// Which part of each utterance is classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Speech,
    Nonspeech,
    /// The full utterance, without VAD.
    Combined,
}

named_enum!(Condition { Speech => "speech", Nonspeech => "nonspeech", Combined => "combined" });

impl Condition {
    pub fn title(self) -> &'static str {
        match self {
            Condition::Speech => "Speech",
            Condition::Nonspeech => "Non-speech",
            Condition::Combined => "Speech&Non-speech",
        }
    }
}
