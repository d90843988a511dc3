use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use recbias::corpus::{generate_synthetic_corpus, Corpus, NoiseColor, SynthSpec};
use recbias::evaluation::{group_snr_stats, run_audit, write_report, AuditConfig, Condition};
use recbias::features::{FeatureKind, FeatureVector};
use recbias::segmentation::{
    detect_segments, estimate_utterance_snr, split_utterance, write_segments_json, write_snr_csv, SegmentRecord, SnrRecord,
    VadConfig,
};
use recbias::{par, Group};

const EXIT_BIAS: u8 = 2;

/// Audit a two-group speech corpus for recording-condition bias.
///
/// Set AUDIT_THREADS to cap the worker threads (0 or unset = one per core).
#[derive(Parser)]
#[command(name = "recbias", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with a planted group difference.
    Synth(SynthArgs),
    /// Write speech / non-speech segments of every utterance as JSON.
    Vad(VadArgs),
    /// Write per-utterance SNR estimates as CSV and print group statistics.
    Snr(SnrArgs),
    /// Write one feature vector per utterance as CSV.
    Features(FeaturesArgs),
    /// Run the full leave-one-speaker-out audit and write the report.
    ///
    /// Exits with status 2 when the environment-bias flag is raised.
    Audit(AuditArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory (manifest.tsv, truth.json, wav/)
    #[arg(long)]
    out: PathBuf,
    /// Speakers per group
    #[arg(long, default_value_t = 10)]
    speakers: usize,
    /// Utterances per speaker
    #[arg(long, default_value_t = 40)]
    utts: usize,
    /// SNR of group A over the speech region, dB
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    snr_a: f64,
    /// SNR of group B over the speech region, dB
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    snr_b: f64,
    /// Spectral tilt applied to group B speech, dB per octave
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    tilt_b: f64,
    /// Speech duration per utterance, seconds
    #[arg(long, default_value_t = 1.5)]
    speech_s: f64,
    /// Leading silence, seconds
    #[arg(long, default_value_t = 0.5)]
    lead_s: f64,
    /// Trailing silence, seconds
    #[arg(long, default_value_t = 0.5)]
    trail_s: f64,
    /// Noise colour: white or pink
    #[arg(long, default_value = "white", value_parser = parse_noise)]
    noise: NoiseColor,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn parse_noise(s: &str) -> Result<NoiseColor, String> {
    match s {
        "white" => Ok(NoiseColor::White),
        "pink" => Ok(NoiseColor::Pink),
        _ => Err(format!("expected white or pink, got {s:?}")),
    }
}

#[derive(Args, Clone)]
struct VadFlags {
    /// Activity threshold above the noise floor, dB
    #[arg(long, default_value_t = VadConfig::default().threshold_db_over_floor)]
    threshold_db: f64,
    /// Shortest kept speech run, ms
    #[arg(long, default_value_t = VadConfig::default().min_speech_ms)]
    min_speech_ms: f64,
    /// Longest gap merged into surrounding speech, ms
    #[arg(long, default_value_t = VadConfig::default().max_gap_ms)]
    max_gap_ms: f64,
    /// Frames appended after each active run
    #[arg(long, default_value_t = VadConfig::default().hangover_frames)]
    hangover_frames: usize,
}

impl VadFlags {
    fn config(&self) -> VadConfig {
        VadConfig {
            threshold_db_over_floor: self.threshold_db,
            min_speech_ms: self.min_speech_ms,
            max_gap_ms: self.max_gap_ms,
            hangover_frames: self.hangover_frames,
        }
    }
}

#[derive(Args)]
struct VadArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output JSON file
    #[arg(long, default_value = "segments.json")]
    out: PathBuf,
    #[command(flatten)]
    vad: VadFlags,
}

#[derive(Args)]
struct SnrArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output CSV file
    #[arg(long, default_value = "snr.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// mfcc_stats, sparsity or mel_pooled
    #[arg(long, default_value = "mfcc_stats", value_parser = parse_kind)]
    kind: FeatureKind,
    /// speech, nonspeech or combined (whole utterance)
    #[arg(long, default_value = "combined")]
    condition: Condition,
    /// Output CSV file
    #[arg(long, default_value = "features.csv")]
    out: PathBuf,
    #[command(flatten)]
    vad: VadFlags,
}

fn parse_kind(s: &str) -> Result<FeatureKind, String> {
    [FeatureKind::MfccStats, FeatureKind::Sparsity, FeatureKind::MelPooled]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| format!("expected mfcc_stats, sparsity or mel_pooled, got {s:?}"))
}

#[derive(Args)]
struct AuditArgs {
    /// key = value config file; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus manifest [default: manifest.tsv]
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Report directory [default: .]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Report base name [default: audit]
    #[arg(long)]
    name: Option<String>,
    /// Comma-separated approaches [default: svm_mfcc,svm_sparsity,svm_pca_stack,mlp_mel]
    #[arg(long)]
    approaches: Option<String>,
    /// Comma-separated conditions [default: speech,nonspeech,combined]
    #[arg(long)]
    conditions: Option<String>,
    /// Comma-separated seeds [default: 17,42,1337]
    #[arg(long)]
    seeds: Option<String>,
    /// Extra config override, repeatable (e.g. --set grid_c=10,10000)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Also write the effective configuration to <out_dir>/<name>.audit.cfg
    #[arg(long)]
    save_config: bool,
}

impl AuditArgs {
    fn config(&self) -> Result<AuditConfig> {
        let mut cfg = match &self.config {
            Some(p) => AuditConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
            None => AuditConfig::default(),
        };
        let mut set = |k: &str, v: &str| cfg.set(k, v).with_context(|| format!("option {k}"));
        if let Some(v) = &self.manifest {
            set("manifest", &v.display().to_string())?;
        }
        if let Some(v) = &self.out_dir {
            set("output_dir", &v.display().to_string())?;
        }
        for (key, value) in [("report_name", &self.name), ("approaches", &self.approaches), ("conditions", &self.conditions), ("seeds", &self.seeds)] {
            if let Some(v) = value {
                set(key, v)?;
            }
        }
        for o in &self.overrides {
            let Some((k, v)) = o.split_once('=') else { bail!("--set expects KEY=VALUE, got {o:?}") };
            set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open_corpus(manifest: &Path) -> Result<Corpus> {
    Corpus::open(manifest).with_context(|| format!("opening corpus {}", manifest.display()))
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        speakers_per_group: a.speakers,
        utterances_per_speaker: a.utts,
        snr_db_group_a: a.snr_a,
        snr_db_group_b: a.snr_b,
        tilt_db_per_octave_group_b: a.tilt_b,
        speech_duration_s: a.speech_s,
        leading_silence_s: a.lead_s,
        trailing_silence_s: a.trail_s,
        noise_color: a.noise,
        seed: a.seed,
    };
    let g = generate_synthetic_corpus(&spec, &a.out)?;
    println!("{}", g.manifest.display());
    Ok(())
}

fn cmd_vad(a: &VadArgs) -> Result<()> {
    let corpus = open_corpus(&a.manifest)?;
    let cfg = a.vad.config();
    let per_utt = par::try_map(&corpus.utterances(), |r| -> Result<Vec<SegmentRecord>> {
        let utt = corpus.load(r)?;
        let spans = detect_segments(&utt, &cfg).with_context(|| format!("segmenting {}", r.path.display()))?;
        Ok(SegmentRecord::from_spans(&r.utterance_id, &spans))
    })?;
    let records: Vec<SegmentRecord> = per_utt.into_iter().flatten().collect();
    let mut w = create(&a.out)?;
    write_segments_json(&mut w, &records)?;
    writeln!(w)?;
    w.flush()?;
    println!("{} segments -> {}", records.len(), a.out.display());
    Ok(())
}

fn cmd_snr(a: &SnrArgs) -> Result<()> {
    let corpus = open_corpus(&a.manifest)?;
    let rows = par::try_map(&corpus.utterances(), |r| -> Result<SnrRecord> {
        let utt = corpus.load(r)?;
        let e = estimate_utterance_snr(&utt).with_context(|| format!("estimating SNR of {}", r.path.display()))?;
        Ok(SnrRecord {
            utterance_id: r.utterance_id.clone(),
            speaker_id: r.speaker_id.clone(),
            group: r.group,
            snr_db: e.snr_db,
            n_noise_frames: e.n_noise_frames,
            n_active_frames: e.n_active_frames,
        })
    })?;
    write_snr_csv(create(&a.out)?, &rows)?;
    let stats = group_snr_stats(rows.iter().map(|r| (r.group, r.snr_db)))?;
    for g in [Group::A, Group::B] {
        let s = stats.get(g);
        println!("group {g}: {:.1} ± {:.1} dB over {} utterances", s.mean_db, s.std_db, s.n);
    }
    println!("difference: {:.1} dB", stats.a.mean_db - stats.b.mean_db);
    Ok(())
}

fn cmd_features(a: &FeaturesArgs) -> Result<()> {
    let corpus = open_corpus(&a.manifest)?;
    let cfg = a.vad.config();
    let rows = par::try_map(&corpus.utterances(), |r| -> Result<Option<FeatureVector>> {
        let utt = corpus.load(r)?;
        let signal = match a.condition {
            Condition::Combined => utt.samples.clone(),
            c => {
                let spans = detect_segments(&utt, &cfg)?;
                let (speech, nonspeech) = split_utterance(&utt, &spans)?;
                if c == Condition::Speech { speech } else { nonspeech }
            }
        };
        match FeatureVector::extract(a.kind, &signal, &r.utterance_id, &r.speaker_id) {
            Ok(v) => Ok(Some(v)),
            Err(e) => {
                log::warn!("{}: {e}; skipped", r.utterance_id);
                Ok(None)
            }
        }
    })?;
    let rows: Vec<FeatureVector> = rows.into_iter().flatten().collect();
    recbias::features::write_features_csv(create(&a.out)?, &rows)?;
    println!("{} vectors -> {}", rows.len(), a.out.display());
    Ok(())
}

fn cmd_audit(a: &AuditArgs) -> Result<bool> {
    let cfg = a.config()?;
    let report = run_audit(&cfg).with_context(|| format!("auditing {}", cfg.manifest.display()))?;
    let (json, txt) = write_report(&report, &cfg.output_dir, &cfg.report_name)?;
    if a.save_config {
        let path = cfg.output_dir.join(format!("{}.audit.cfg", cfg.report_name));
        std::fs::write(&path, cfg.to_text()).with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{}", recbias::evaluation::render_text(&report));
    println!("\nreport: {} / {}", json.display(), txt.display());
    Ok(report.flags.environment_bias)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("AUDIT_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().with_context(|| format!("AUDIT_THREADS={raw:?} is not a thread count"))?;
    #[cfg(feature = "parallel")]
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    match &cli.command {
        Command::Synth(a) => cmd_synth(a).map(|()| false),
        Command::Vad(a) => cmd_vad(a).map(|()| false),
        Command::Snr(a) => cmd_snr(a).map(|()| false),
        Command::Features(a) => cmd_features(a).map(|()| false),
        Command::Audit(a) => cmd_audit(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_BIAS),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
