use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Approach, Condition, EvalError};
use crate::classifiers::{MlpParams, SvmGrid};
use crate::segmentation::VadConfig;

pub const DEFAULT_SEEDS: [u64; 3] = [17, 42, 1337];
pub const DEFAULT_VAL_FRACTION: f64 = 0.1;

/// MLP settings shared by every fold; seeds come from the audit seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
}

impl Default for MlpSettings {
    fn default() -> Self {
        let p = MlpParams::default();
        Self { epochs: p.epochs, batch_size: p.batch_size, learning_rate: p.learning_rate, patience: p.patience }
    }
}

impl MlpSettings {
    pub fn params(&self, seed: u64) -> MlpParams {
        MlpParams {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            patience: self.patience,
            seed,
            ..MlpParams::default()
        }
    }
}

/// Everything an audit run depends on. Read from flat `key = value` text;
/// `#` starts a comment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    pub report_name: String,
    pub approaches: Vec<Approach>,
    pub conditions: Vec<Condition>,
    pub vad: VadConfig,
    pub seeds: Vec<u64>,
    pub grid: SvmGrid,
    pub val_fraction: f64,
    pub mlp: MlpSettings,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            manifest: PathBuf::from("manifest.tsv"),
            output_dir: PathBuf::from("."),
            report_name: "audit".to_string(),
            approaches: Approach::ALL.to_vec(),
            conditions: Condition::ALL.to_vec(),
            vad: VadConfig::default(),
            seeds: DEFAULT_SEEDS.to_vec(),
            grid: SvmGrid::default(),
            val_fraction: DEFAULT_VAL_FRACTION,
            mlp: MlpSettings::default(),
        }
    }
}

pub const CONFIG_KEYS: [&str; 18] = [
    "manifest",
    "output_dir",
    "report_name",
    "approaches",
    "conditions",
    "seeds",
    "grid_c",
    "grid_gamma",
    "svm_tol",
    "val_fraction",
    "vad_threshold_db",
    "vad_min_speech_ms",
    "vad_max_gap_ms",
    "vad_hangover_frames",
    "mlp_epochs",
    "mlp_batch_size",
    "mlp_learning_rate",
    "mlp_patience",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, EvalError> {
    value.parse().map_err(|_| EvalError::Config(format!("{key}: cannot parse {value:?}")))
}

fn list<T>(key: &str, value: &str, f: impl Fn(&str) -> Result<T, EvalError>) -> Result<Vec<T>, EvalError> {
    let out: Vec<T> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(EvalError::Config(format!("{key}: empty list")));
    }
    Ok(out)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl AuditConfig {
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| EvalError::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a config file; relative `manifest` and `output_dir` are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.manifest.is_relative() {
            cfg.manifest = base.join(&cfg.manifest);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), EvalError> {
        match key {
            "manifest" => self.manifest = PathBuf::from(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "report_name" => self.report_name = value.to_string(),
            "approaches" => self.approaches = list(key, value, |s| s.parse())?,
            "conditions" => self.conditions = list(key, value, |s| s.parse())?,
            "seeds" => self.seeds = list(key, value, |s| num(key, s))?,
            "grid_c" => self.grid.c = list(key, value, |s| num(key, s))?,
            "grid_gamma" => self.grid.gamma = list(key, value, |s| num(key, s))?,
            "svm_tol" => self.grid.tol = num(key, value)?,
            "val_fraction" => self.val_fraction = num(key, value)?,
            "vad_threshold_db" => self.vad.threshold_db_over_floor = num(key, value)?,
            "vad_min_speech_ms" => self.vad.min_speech_ms = num(key, value)?,
            "vad_max_gap_ms" => self.vad.max_gap_ms = num(key, value)?,
            "vad_hangover_frames" => self.vad.hangover_frames = num(key, value)?,
            "mlp_epochs" => self.mlp.epochs = num(key, value)?,
            "mlp_batch_size" => self.mlp.batch_size = num(key, value)?,
            "mlp_learning_rate" => self.mlp.learning_rate = num(key, value)?,
            "mlp_patience" => self.mlp.patience = num(key, value)?,
            _ => return Err(EvalError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::Config(m.to_string()));
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad("val_fraction must lie in (0, 1)");
        }
        if self.seeds.is_empty() || self.approaches.is_empty() || self.conditions.is_empty() {
            return bad("seeds, approaches and conditions must be non-empty");
        }
        if !(self.conditions.contains(&Condition::Speech) && self.conditions.contains(&Condition::Nonspeech)) {
            return bad("conditions must include speech and nonspeech");
        }
        if self.grid.c.iter().chain(&self.grid.gamma).any(|v| !(*v > 0.0 && v.is_finite())) || self.grid.tol.is_nan() || self.grid.tol <= 0.0 {
            return bad("grid values and svm_tol must be positive");
        }
        if self.mlp.batch_size == 0 || self.mlp.learning_rate.is_nan() || self.mlp.learning_rate <= 0.0 {
            return bad("mlp_batch_size and mlp_learning_rate must be positive");
        }
        if self.report_name.is_empty() || self.report_name.contains(['/', '\\']) {
            return bad("report_name must be a plain file name");
        }
        Ok(())
    }

    /// Canonical `key = value` rendering; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("write to String");
        kv("manifest", self.manifest.display().to_string());
        kv("output_dir", self.output_dir.display().to_string());
        kv("report_name", self.report_name.clone());
        kv("approaches", join(&self.approaches));
        kv("conditions", join(&self.conditions));
        kv("seeds", join(&self.seeds));
        kv("grid_c", join(&self.grid.c));
        kv("grid_gamma", join(&self.grid.gamma));
        kv("svm_tol", self.grid.tol.to_string());
        kv("val_fraction", self.val_fraction.to_string());
        kv("vad_threshold_db", self.vad.threshold_db_over_floor.to_string());
        kv("vad_min_speech_ms", self.vad.min_speech_ms.to_string());
        kv("vad_max_gap_ms", self.vad.max_gap_ms.to_string());
        kv("vad_hangover_frames", self.vad.hangover_frames.to_string());
        kv("mlp_epochs", self.mlp.epochs.to_string());
        kv("mlp_batch_size", self.mlp.batch_size.to_string());
        kv("mlp_learning_rate", self.mlp.learning_rate.to_string());
        kv("mlp_patience", self.mlp.patience.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_protocol() {
        let c = AuditConfig::default();
        assert_eq!(c.grid.cells(), vec![(10.0, 1e-4), (10.0, 0.1), (1e4, 1e-4), (1e4, 0.1)]);
        assert_eq!(c.seeds, vec![17, 42, 1337]);
        assert_eq!(c.val_fraction, 0.1);
        assert_eq!(c.approaches.len(), 4);
        assert_eq!(c.conditions.len(), 3);
    }

    #[test]
    fn parse_and_round_trip() {
        let text = "# audit\nmanifest = data/m.tsv\napproaches = svm_mfcc, svm_sparsity\nseeds=1,2\nvad_hangover_frames = 2 # short\n";
        let c = AuditConfig::parse(text).unwrap();
        assert_eq!(c.manifest, PathBuf::from("data/m.tsv"));
        assert_eq!(c.approaches, vec![Approach::SvmMfcc, Approach::SvmSparsity]);
        assert_eq!(c.seeds, vec![1, 2]);
        assert_eq!(c.vad.hangover_frames, 2);
        assert_eq!(AuditConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(c.to_text().lines().count(), CONFIG_KEYS.len());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(AuditConfig::parse("nonsense").is_err());
        assert!(AuditConfig::parse("colour = blue").is_err());
        assert!(AuditConfig::parse("seeds = x").is_err());
        assert!(AuditConfig::parse("approaches = cnn").is_err());
        assert!(AuditConfig::parse("conditions = speech").is_err());
        assert!(AuditConfig::parse("val_fraction = 1.5").is_err());
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audit.cfg");
        std::fs::write(&path, "manifest = corpus/manifest.tsv\noutput_dir = out\n").unwrap();
        let c = AuditConfig::load(&path).unwrap();
        assert_eq!(c.manifest, dir.path().join("corpus/manifest.tsv"));
        assert_eq!(c.output_dir, dir.path().join("out"));
    }
}
