use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use recbias::corpus::{write_manifest, write_wav};
use recbias::{Group, SpeakerRecord};

fn recbias(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recbias")).args(args).env_remove("AUDIT_THREADS").output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "exit {:?}\n{}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn synth(dir: &Path, speakers: usize, extra: &[&str]) -> PathBuf {
    let (d, n) = (dir.display().to_string(), speakers.to_string());
    let mut args = vec!["synth", "--out", &d, "--speakers", &n, "--utts", "8"];
    args.extend_from_slice(extra);
    ok(&recbias(&args));
    dir.join("manifest.tsv")
}

fn files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth(a.path(), 2, &["--seed", "3"]);
    synth(b.path(), 2, &["--seed", "3"]);
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), 2 + 4 * 8);
    assert_eq!(fa, fb);
}

#[test]
fn snr_of_silence_is_the_floor() {
    let dir = tempfile::tempdir().unwrap();
    let mut records = Vec::new();
    for (k, g) in [Group::A, Group::B].into_iter().enumerate() {
        let paths: Vec<PathBuf> = (0..3).map(|u| PathBuf::from(format!("z{k}{u}.wav"))).collect();
        for p in &paths {
            write_wav(&dir.path().join(p), &vec![0.0; 16000]).unwrap();
        }
        records.push(SpeakerRecord { speaker_id: format!("spk{k}"), group: g, utterance_paths: paths });
    }
    let manifest = dir.path().join("m.tsv");
    write_manifest(&manifest, &records).unwrap();
    let csv = dir.path().join("snr.csv");
    ok(&recbias(&["snr", "--manifest", manifest.to_str().unwrap(), "--out", csv.to_str().unwrap()]));
    let mut reader = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["utterance_id", "speaker_id", "group", "snr_db", "n_noise_frames", "n_active_frames"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r[3].parse::<f64>().unwrap(), -20.0);
        assert_eq!(&r[5], "0");
    }
}

#[test]
fn vad_and_features_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), 3, &[]);
    let m = manifest.to_str().unwrap();
    let seg = dir.path().join("seg.json");
    ok(&recbias(&["vad", "--manifest", m, "--out", seg.to_str().unwrap()]));
    let segs: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&seg).unwrap()).unwrap();
    assert!(segs.iter().any(|s| s["label"] == "speech"));
    assert!(segs.iter().any(|s| s["label"] == "nonspeech"));

    let feats = dir.path().join("f.csv");
    ok(&recbias(&["features", "--manifest", m, "--kind", "sparsity", "--condition", "nonspeech", "--out", feats.to_str().unwrap()]));
    let mut reader = csv::Reader::from_path(&feats).unwrap();
    assert_eq!(reader.headers().unwrap().len(), 3 + 129);
    assert_eq!(reader.records().count(), 48);
}

fn audit(manifest: &Path, out: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_recbias"));
    cmd.args(["audit", "--manifest", manifest.to_str().unwrap(), "--out-dir", out.to_str().unwrap()])
        .args(["--approaches", "svm_mfcc", "--conditions", "speech,nonspeech", "--seeds", "17"]);
    match threads {
        Some(t) => cmd.env("AUDIT_THREADS", t),
        None => cmd.env_remove("AUDIT_THREADS"),
    };
    cmd.output().unwrap()
}

#[test]
fn biased_corpus_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("c"), 5, &[]);
    let out = audit(&manifest, &dir.path().join("r"), Some("1"));
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("r/audit.audit.json").is_file());
    assert!(dir.path().join("r/audit.audit.txt").is_file());
}

#[test]
fn matched_conditions_exit_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("c"), 3, &["--snr-b", "30", "--tilt-b", "3"]);
    let out = audit(&manifest, &dir.path().join("r"), None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let out = recbias(&["audit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));

    let out = recbias(&["audit", "--manifest", dir.path().join("missing.tsv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let manifest = synth(&dir.path().join("c"), 3, &[]);
    let out = audit(&manifest, &dir.path().join("r"), Some("lots"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("AUDIT_THREADS"));
}

#[test]
fn thread_count_does_not_change_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("c"), 3, &[]);
    audit(&manifest, &dir.path().join("one"), Some("1"));
    audit(&manifest, &dir.path().join("many"), Some("4"));
    let strip = |p: PathBuf| {
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v["config"]["output_dir"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(dir.path().join("one/audit.audit.json")), strip(dir.path().join("many/audit.audit.json")));
}

#[test]
fn help_lists_defaults() {
    let text = ok(&recbias(&["synth", "--help"]));
    assert!(text.contains("[default: 10]") && text.contains("[default: 40]"));
    let text = ok(&recbias(&["vad", "--help"]));
    assert!(text.contains("--hangover-frames"));
}
