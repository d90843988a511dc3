use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Approach, AuditConfig, Condition, EvalError};
use crate::corpus::Group;

/// Non-speech within this much of speech accuracy counts as "as good".
pub const BIAS_MARGIN: f64 = 0.05;
pub const SNR_GAP_DB: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerPrediction {
    pub speaker_id: String,
    pub group: Group,
    /// Predicted group per seed.
    pub predicted: Vec<Group>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub approach: Approach,
    pub condition: Condition,
    pub seeds: Vec<u64>,
    /// Fraction of speakers classified correctly, per seed.
    pub seed_accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over seeds.
    pub std: f64,
    pub n_items: usize,
    pub skipped_items: Vec<String>,
    pub speakers: Vec<SpeakerPrediction>,
}

pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl ConditionResult {
    pub fn from_predictions(
        approach: Approach,
        condition: Condition,
        seeds: Vec<u64>,
        speakers: Vec<SpeakerPrediction>,
        n_items: usize,
        skipped_items: Vec<String>,
    ) -> Self {
        let n = speakers.len() as f64;
        let seed_accuracies: Vec<f64> = (0..seeds.len())
            .map(|s| speakers.iter().filter(|p| p.predicted[s] == p.group).count() as f64 / n)
            .collect();
        let (mean, std) = mean_std(&seed_accuracies);
        Self { approach, condition, seeds, seed_accuracies, mean, std, n_items, skipped_items, speakers }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrStats {
    pub mean_db: f64,
    /// Population standard deviation.
    pub std_db: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSnrStats {
    pub a: SnrStats,
    pub b: SnrStats,
}

impl GroupSnrStats {
    pub fn get(&self, g: Group) -> SnrStats {
        match g {
            Group::A => self.a,
            Group::B => self.b,
        }
    }
}

/// Mean and spread of utterance SNR estimates per group.
pub fn group_snr_stats(values: impl IntoIterator<Item = (Group, f64)>) -> Result<GroupSnrStats, EvalError> {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (g, v) in values {
        match g {
            Group::A => a.push(v),
            Group::B => b.push(v),
        }
    }
    let stats = |v: &[f64], g: Group| {
        if v.is_empty() {
            return Err(EvalError::EmptyGroup(g));
        }
        let (mean_db, std_db) = mean_std(v);
        Ok(SnrStats { mean_db, std_db, n: v.len() })
    };
    Ok(GroupSnrStats { a: stats(&a, Group::A)?, b: stats(&b, Group::B)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFlags {
    pub environment_bias: bool,
    pub snr_gap: bool,
}

/// `environment_bias` holds when, for a strict majority of the approaches
/// with both conditions, non-speech accuracy reaches speech accuracy minus
/// [`BIAS_MARGIN`]. `snr_gap` holds when the group SNR means differ by more
/// than [`SNR_GAP_DB`].
pub fn compare_conditions(results: &[ConditionResult], snr: &GroupSnrStats) -> Result<AuditFlags, EvalError> {
    let mut approaches: Vec<Approach> = results.iter().map(|r| r.approach).collect();
    approaches.sort();
    approaches.dedup();
    let find = |a: Approach, c: Condition| results.iter().find(|r| r.approach == a && r.condition == c);
    let mut compared = 0usize;
    let mut biased = 0usize;
    let mut missing = None;
    for &a in &approaches {
        match (find(a, Condition::Speech), find(a, Condition::Nonspeech)) {
            (Some(s), Some(n)) => {
                compared += 1;
                if n.mean >= s.mean - BIAS_MARGIN {
                    biased += 1;
                }
            }
            (None, _) => missing = missing.or(Some((a, Condition::Speech))),
            (_, None) => missing = missing.or(Some((a, Condition::Nonspeech))),
        }
    }
    if compared == 0 {
        let (approach, condition) = missing.unwrap_or((Approach::SvmMfcc, Condition::Speech));
        return Err(EvalError::MissingCondition { approach, condition });
    }
    Ok(AuditFlags {
        environment_bias: 2 * biased > compared,
        snr_gap: (snr.a.mean_db - snr.b.mean_db).abs() > SNR_GAP_DB,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub corpus_id: String,
    pub n_speakers: usize,
    pub n_utterances: usize,
    pub snr: GroupSnrStats,
    pub results: Vec<ConditionResult>,
    pub flags: AuditFlags,
    pub config: AuditConfig,
}

impl AuditReport {
    pub fn result(&self, approach: Approach, condition: Condition) -> Option<&ConditionResult> {
        self.results.iter().find(|r| r.approach == approach && r.condition == condition)
    }
}

const APPROACH_WIDTH: usize = 16;
const CELL_WIDTH: usize = 20;

fn percent_cell(r: Option<&ConditionResult>) -> String {
    match r {
        Some(r) => format!("{:.1} ± {:.1}", 100.0 * r.mean, 100.0 * r.std),
        None => "-".to_string(),
    }
}

/// Plain-text table: one row per approach, one column per condition, each
/// cell the seed mean ± std of speaker accuracy in percent.
pub fn render_text(report: &AuditReport) -> String {
    let mut s = String::new();
    let mut approaches: Vec<Approach> = Vec::new();
    for r in &report.results {
        if !approaches.contains(&r.approach) {
            approaches.push(r.approach);
        }
    }
    let conditions: Vec<Condition> =
        Condition::ALL.into_iter().filter(|c| report.results.iter().any(|r| r.condition == *c)).collect();
    let n_seeds = report.results.first().map_or(0, |r| r.seeds.len());

    let _ = writeln!(s, "Recording-condition audit: {}", report.corpus_id);
    let _ = writeln!(s, "{} speakers, {} utterances", report.n_speakers, report.n_utterances);
    let _ = writeln!(s);
    let _ = writeln!(s, "Estimated SNR [dB] across utterances");
    for g in [Group::A, Group::B] {
        let st = report.snr.get(g);
        let _ = writeln!(s, "  group {g}  {:.1} ± {:.1}  (n = {})", st.mean_db, st.std_db, st.n);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Speaker classification accuracy [%], mean ± std over {n_seeds} seeds");
    let mut header = format!("{:<APPROACH_WIDTH$}", "Approach");
    for c in &conditions {
        let _ = write!(header, "{:<CELL_WIDTH$}", c.title());
    }
    let _ = writeln!(s, "{}", header.trim_end());
    for a in approaches {
        let mut row = format!("{:<APPROACH_WIDTH$}", a.as_str());
        for &c in &conditions {
            let _ = write!(row, "{:<CELL_WIDTH$}", percent_cell(report.result(a, c)));
        }
        let _ = writeln!(s, "{}", row.trim_end());
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "environment_bias: {}", report.flags.environment_bias);
    let _ = writeln!(s, "snr_gap: {}", report.flags.snr_gap);
    s
}

/// Writes `<name>.audit.json` and `<name>.audit.txt` into `dir`.
pub fn write_report(report: &AuditReport, dir: &Path, name: &str) -> Result<(PathBuf, PathBuf), EvalError> {
    std::fs::create_dir_all(dir).map_err(|source| EvalError::Io { path: dir.to_path_buf(), source })?;
    let json_path = dir.join(format!("{name}.audit.json"));
    let txt_path = dir.join(format!("{name}.audit.txt"));
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(&json_path, json).map_err(|source| EvalError::Io { path: json_path.clone(), source })?;
    std::fs::write(&txt_path, render_text(report)).map_err(|source| EvalError::Io { path: txt_path.clone(), source })?;
    Ok((json_path, txt_path))
}
