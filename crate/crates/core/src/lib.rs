//! Recording-condition bias auditing for two-group speech corpora.
//!
//! The pipeline splits each utterance into speech and non-speech material
//! with an energy VAD, estimates utterance-level SNR, extracts handcrafted
//! features (MFCC functionals, spectral sparsity, Mel representations),
//! and runs leave-one-speaker-out classification on speech-only,
//! non-speech-only and full-utterance material. A corpus whose groups are
//! as separable from silence as from speech is flagged as biased.
//!
//! Data-parallel loops go through [`par`]; build without the default
//! `parallel` feature for a purely sequential library.

pub mod classifiers;
pub mod corpus;
pub mod dsp;
pub mod evaluation;
pub mod features;
pub mod par;
pub mod segmentation;

/// The only sample rate accepted anywhere in the pipeline.
pub const SAMPLE_RATE_HZ: u32 = 16_000;

pub use corpus::{Group, SpeakerRecord, Utterance};
pub use evaluation::{AuditConfig, AuditReport};
