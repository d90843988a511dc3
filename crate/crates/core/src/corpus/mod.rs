//! Corpus access: manifests, 16 kHz PCM16 WAV I/O, and synthetic two-group
//! corpora with planted recording-condition differences.

mod manifest;
mod synth;
mod wav;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use manifest::{load_manifest, parse_manifest, write_manifest, Corpus, UtteranceRef};
pub use synth::{
    generate_synthetic_corpus, render_utterance, speaker_f0_hz, GeneratedCorpus, GroundTruth, NoiseColor,
    RenderedUtterance, SynthSpec,
};
pub use wav::{read_wav, write_wav};

use crate::SAMPLE_RATE_HZ;

/// Corpus group. `A` is the control group, `B` the target group (class 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "A")]
    A,
    #[serde(rename = "B")]
    B,
}

impl Group {
    pub fn token(self) -> &'static str {
        match self {
            Group::A => "A",
            Group::B => "B",
        }
    }

    pub fn from_token(s: &str) -> Option<Group> {
        match s {
            "A" => Some(Group::A),
            "B" => Some(Group::B),
            _ => None,
        }
    }

    /// Class index: 0 for control, 1 for target.
    pub fn class(self) -> usize {
        match self {
            Group::A => 0,
            Group::B => 1,
        }
    }

    pub fn from_class(c: usize) -> Group {
        if c == 0 {
            Group::A
        } else {
            Group::B
        }
    }

    /// SVM label: -1 for control, +1 for target.
    pub fn sign(self) -> f64 {
        match self {
            Group::A => -1.0,
            Group::B => 1.0,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerRecord {
    pub speaker_id: String,
    pub group: Group,
    pub utterance_paths: Vec<PathBuf>,
}

/// One mono 16 kHz recording, samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub utterance_id: String,
    pub speaker_id: String,
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Utterance {
    pub fn new(
        utterance_id: impl Into<String>,
        speaker_id: impl Into<String>,
        samples: Vec<f64>,
    ) -> Result<Self, CorpusError> {
        let utterance_id = utterance_id.into();
        if samples.is_empty() {
            return Err(CorpusError::EmptyUtterance(utterance_id));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(CorpusError::NonFiniteSamples(utterance_id));
        }
        Ok(Self { utterance_id, speaker_id: speaker_id.into(), samples, sample_rate: SAMPLE_RATE_HZ })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a readable WAV file: {message}")]
    InvalidWav { path: PathBuf, message: String },
    #[error("{path}: sample rate {rate} Hz, expected 16000 Hz")]
    WrongSampleRate { path: PathBuf, rate: u32 },
    #[error("{path}: {channels} channels, expected mono")]
    WrongChannelCount { path: PathBuf, channels: u16 },
    #[error("{path}: {bits}-bit samples, expected 16-bit PCM")]
    WrongBitDepth { path: PathBuf, bits: u16 },
    #[error("{path}: payload truncated, header declares {declared} frames but only {read} present")]
    Truncated { path: PathBuf, declared: usize, read: usize },
    #[error("manifest line {line}: expected `speaker_id<TAB>group<TAB>path`, got {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("manifest line {line}: unknown group token {token:?} (expected A or B)")]
    UnknownGroup { line: usize, token: String },
    #[error("manifest line {line}: speaker {speaker_id:?} appears in more than one record")]
    DuplicateSpeaker { line: usize, speaker_id: String },
    #[error("manifest line {line}: speaker {speaker_id:?} listed with conflicting groups")]
    ConflictingGroup { line: usize, speaker_id: String },
    #[error("manifest contains no records")]
    EmptyManifest,
    #[error("manifest has no speakers in group {0}")]
    MissingGroup(Group),
    #[error("utterance {0:?} has no samples")]
    EmptyUtterance(String),
    #[error("utterance {0:?} has non-finite samples")]
    NonFiniteSamples(String),
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error("serialising {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.into(), source }
    }
}
