use std::path::Path;

use super::{CorpusError, Utterance};
use crate::SAMPLE_RATE_HZ;

const PCM_SCALE: f64 = 32768.0;

/// Reads a 16 kHz mono PCM16 WAV; samples are scaled by 1/32768.
///
/// The utterance id is the file stem; the speaker id is left empty for the
/// caller to fill in.
pub fn read_wav(path: &Path) -> Result<Utterance, CorpusError> {
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(CorpusError::WrongChannelCount { path: path.into(), channels: spec.channels });
    }
    if spec.sample_rate != SAMPLE_RATE_HZ {
        return Err(CorpusError::WrongSampleRate { path: path.into(), rate: spec.sample_rate });
    }
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(CorpusError::WrongBitDepth { path: path.into(), bits: spec.bits_per_sample });
    }
    let declared = reader.len() as usize;
    let mut samples = Vec::with_capacity(declared);
    for s in reader.samples::<i16>() {
        match s {
            Ok(v) => samples.push(f64::from(v) / PCM_SCALE),
            // hound reports a short payload as an I/O error mid-stream
            Err(hound::Error::IoError(_)) => break,
            Err(e) => return Err(wav_error(path, e)),
        }
    }
    if samples.len() != declared {
        return Err(CorpusError::Truncated { path: path.into(), declared, read: samples.len() });
    }
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Utterance::new(id, String::new(), samples)
}

/// Writes PCM16 mono at 16 kHz; values are scaled by 32768 and clipped to
/// the i16 range.
pub fn write_wav(path: &Path, samples: &[f64]) -> Result<(), CorpusError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE_HZ,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &x in samples {
        let q = (x * PCM_SCALE).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))
}

fn wav_error(path: &Path, e: hound::Error) -> CorpusError {
    match e {
        hound::Error::IoError(io) => CorpusError::io(path, io),
        other => CorpusError::InvalidWav { path: path.into(), message: other.to_string() },
    }
}
