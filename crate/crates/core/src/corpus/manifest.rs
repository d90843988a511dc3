use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{read_wav, CorpusError, Group, SpeakerRecord, Utterance};

/// Parses the tab-separated manifest format.
///
/// Each non-comment line is `speaker_id<TAB>group<TAB>relative/path.wav`.
/// A speaker's lines must be contiguous; a speaker id that reappears after
/// another speaker's block is a duplicate record.
pub fn parse_manifest(text: &str) -> Result<Vec<SpeakerRecord>, CorpusError> {
    let mut records: Vec<SpeakerRecord> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.trim().is_empty()) {
            return Err(CorpusError::MalformedLine { line: line_no, content: line.to_string() });
        }
        let (speaker_id, token, path) = (fields[0].trim(), fields[1].trim(), fields[2].trim());
        let group =
            Group::from_token(token).ok_or_else(|| CorpusError::UnknownGroup { line: line_no, token: token.into() })?;
        match records.last_mut() {
            Some(last) if last.speaker_id == speaker_id => {
                if last.group != group {
                    return Err(CorpusError::ConflictingGroup { line: line_no, speaker_id: speaker_id.into() });
                }
                last.utterance_paths.push(PathBuf::from(path));
            }
            _ => {
                if seen.contains_key(speaker_id) {
                    return Err(CorpusError::DuplicateSpeaker { line: line_no, speaker_id: speaker_id.into() });
                }
                seen.insert(speaker_id.to_string(), records.len());
                records.push(SpeakerRecord {
                    speaker_id: speaker_id.to_string(),
                    group,
                    utterance_paths: vec![PathBuf::from(path)],
                });
            }
        }
    }
    if records.is_empty() {
        return Err(CorpusError::EmptyManifest);
    }
    for g in [Group::A, Group::B] {
        if !records.iter().any(|r| r.group == g) {
            return Err(CorpusError::MissingGroup(g));
        }
    }
    Ok(records)
}

pub fn load_manifest(path: &Path) -> Result<Vec<SpeakerRecord>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    parse_manifest(&text)
}

pub fn write_manifest(path: &Path, records: &[SpeakerRecord]) -> Result<(), CorpusError> {
    let mut out = String::from("# speaker_id\tgroup\tpath\n");
    for r in records {
        for p in &r.utterance_paths {
            let _ = writeln!(out, "{}\t{}\t{}", r.speaker_id, r.group, p.display());
        }
    }
    std::fs::write(path, out).map_err(|e| CorpusError::io(path, e))
}

/// One utterance of a loaded corpus, not yet read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRef {
    pub utterance_id: String,
    pub speaker_index: usize,
    pub speaker_id: String,
    pub group: Group,
    pub path: PathBuf,
}

/// A manifest together with the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub id: String,
    pub root: PathBuf,
    pub speakers: Vec<SpeakerRecord>,
}

impl Corpus {
    pub fn open(manifest: &Path) -> Result<Self, CorpusError> {
        let speakers = load_manifest(manifest)?;
        let root = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
        let id = manifest
            .parent()
            .and_then(|p| p.file_name())
            .or_else(|| manifest.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".into());
        Ok(Self { id, root, speakers })
    }

    /// Every utterance in manifest order.
    pub fn utterances(&self) -> Vec<UtteranceRef> {
        self.speakers
            .iter()
            .enumerate()
            .flat_map(|(si, rec)| {
                rec.utterance_paths.iter().map(move |p| UtteranceRef {
                    utterance_id: utterance_id_for(p),
                    speaker_index: si,
                    speaker_id: rec.speaker_id.clone(),
                    group: rec.group,
                    path: self.root.join(p),
                })
            })
            .collect()
    }

    pub fn load(&self, r: &UtteranceRef) -> Result<Utterance, CorpusError> {
        let mut u = read_wav(&r.path)?;
        u.utterance_id = r.utterance_id.clone();
        u.speaker_id = r.speaker_id.clone();
        Ok(u)
    }
}

fn utterance_id_for(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(rows: &[(&str, &str, &str)]) -> String {
        rows.iter().map(|(s, g, p)| format!("{s}\t{g}\t{p}\n")).collect()
    }

    #[test]
    fn two_speakers_three_utterances_each() {
        let mut text = String::from("# header\n");
        for s in ["c1", "d1"] {
            let g = if s == "c1" { "A" } else { "B" };
            for u in 0..3 {
                text += &format!("{s}\t{g}\t{s}/{u}.wav\n");
            }
        }
        let recs = parse_manifest(&text).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.utterance_paths.len() == 3));
        assert_eq!(recs[1].group, Group::B);
    }

    #[test]
    fn duplicate_speaker_block() {
        let text = lines(&[("s1", "A", "a.wav"), ("s2", "B", "b.wav"), ("s1", "A", "c.wav")]);
        assert!(matches!(parse_manifest(&text), Err(CorpusError::DuplicateSpeaker { line: 3, .. })));
    }

    #[test]
    fn conflicting_group() {
        let text = lines(&[("s1", "A", "a.wav"), ("s1", "B", "b.wav")]);
        assert!(matches!(parse_manifest(&text), Err(CorpusError::ConflictingGroup { .. })));
    }

    #[test]
    fn unknown_group_token() {
        let text = lines(&[("s1", "A", "a.wav"), ("s2", "control", "b.wav")]);
        assert!(matches!(parse_manifest(&text), Err(CorpusError::UnknownGroup { line: 2, .. })));
    }

    #[test]
    fn empty_and_one_sided_manifests() {
        assert!(matches!(parse_manifest("# only a comment\n\n"), Err(CorpusError::EmptyManifest)));
        let text = lines(&[("s1", "A", "a.wav")]);
        assert!(matches!(parse_manifest(&text), Err(CorpusError::MissingGroup(Group::B))));
    }

    #[test]
    fn malformed_line() {
        assert!(matches!(parse_manifest("s1 A a.wav\n"), Err(CorpusError::MalformedLine { line: 1, .. })));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_manifest(Path::new("/no/such/manifest.tsv")), Err(CorpusError::Io { .. })));
    }

    #[test]
    fn ua_speech_scale_manifest() {
        let mut text = String::new();
        for s in 0..28 {
            let g = if s < 13 { "A" } else { "B" };
            for u in 0..721 {
                text += &format!("S{s:02}\t{g}\tS{s:02}/u{u:03}.wav\n");
            }
        }
        let recs = parse_manifest(&text).unwrap();
        assert_eq!(recs.len(), 28);
        assert!(recs.iter().all(|r| r.utterance_paths.len() == 721));
    }

    #[test]
    fn write_then_parse() {
        let dir = tempfile::tempdir().unwrap();
        let recs = parse_manifest(&lines(&[("a", "A", "x/1.wav"), ("a", "A", "x/2.wav"), ("b", "B", "y/1.wav")])).unwrap();
        let p = dir.path().join("m.tsv");
        write_manifest(&p, &recs).unwrap();
        assert_eq!(load_manifest(&p).unwrap(), recs);
    }
}
