use std::collections::BTreeMap;

use super::report::{compare_conditions, group_snr_stats, AuditReport, ConditionResult, SpeakerPrediction};
use super::{make_loso_folds, majority_vote, Approach, AuditConfig, Condition, EvalError, Fold, FoldItem};
use crate::classifiers::{grid_search_svm, mlp_predict, mlp_train, svm_predict};
use crate::corpus::{Corpus, Group, SpeakerRecord, UtteranceRef};
use crate::dsp::DspError;
use crate::features::{mel_pooled, mel_segments, mfcc_stats, sparsity_features, FeatureError, Pca, Standardizer, DEFAULT_VARIANCE_RATIO};
use crate::par;
use crate::segmentation::{detect_segments, estimate_utterance_snr, split_utterance, SegmentSpan, SnrEstimate};

/// Per-utterance analysis results; the audio itself is not retained.
#[derive(Debug, Clone)]
pub struct PreparedUtterance {
    pub utterance_id: String,
    pub speaker_index: usize,
    pub group: Group,
    pub duration_s: f64,
    pub snr: SnrEstimate,
    pub spans: Vec<SegmentSpan>,
    /// Feature rows for each configured (approach, condition); `None` when
    /// that condition's signal is too short to analyse.
    pub features: BTreeMap<(Approach, Condition), Option<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub corpus_id: String,
    pub speakers: Vec<SpeakerRecord>,
    pub utterances: Vec<PreparedUtterance>,
}

fn is_too_short(e: &FeatureError) -> bool {
    matches!(e, FeatureError::TooShort { .. } | FeatureError::EmptySignal | FeatureError::Dsp(DspError::TooShort { .. }))
}

fn extract(approach: Approach, signal: &[f64], id: &str) -> Result<Option<Vec<Vec<f64>>>, EvalError> {
    let rows = match approach {
        Approach::SvmMfcc => mfcc_stats(signal).map(|v| vec![v]),
        Approach::SvmSparsity => sparsity_features(signal).map(|v| vec![v]),
        Approach::SvmPcaStack => mfcc_stats(signal).and_then(|mut v| {
            v.extend(sparsity_features(signal)?);
            v.extend(mel_pooled(signal)?);
            Ok(vec![v])
        }),
        Approach::MlpMel => mel_segments(signal, id).map(|segs| segs.iter().map(|s| s.pooled()).collect()),
    };
    match rows {
        Ok(rows) => {
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(EvalError::NonFiniteFeatures { utterance_id: id.to_string(), approach });
            }
            Ok(Some(rows))
        }
        Err(e) if is_too_short(&e) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn prepare_one(corpus: &Corpus, r: &UtteranceRef, cfg: &AuditConfig) -> Result<PreparedUtterance, EvalError> {
    let utt = corpus.load(r)?;
    let spans = detect_segments(&utt, &cfg.vad)?;
    let (speech, nonspeech) = split_utterance(&utt, &spans)?;
    let snr = estimate_utterance_snr(&utt)?;
    let mut features = BTreeMap::new();
    for &condition in &cfg.conditions {
        let signal = match condition {
            Condition::Speech => &speech,
            Condition::Nonspeech => &nonspeech,
            Condition::Combined => &utt.samples,
        };
        for &approach in &cfg.approaches {
            let rows = extract(approach, signal, &r.utterance_id)?;
            if rows.is_none() {
                log::warn!(
                    "{}: {} signal of {} samples too short for {approach}; skipped",
                    r.utterance_id,
                    condition,
                    signal.len()
                );
            }
            features.insert((approach, condition), rows);
        }
    }
    Ok(PreparedUtterance {
        utterance_id: r.utterance_id.clone(),
        speaker_index: r.speaker_index,
        group: r.group,
        duration_s: utt.duration_s(),
        snr,
        spans,
        features,
    })
}

/// Loads every utterance and runs VAD, SNR estimation and the feature
/// extractors needed by the configured approaches and conditions.
pub fn prepare_corpus(corpus: &Corpus, cfg: &AuditConfig) -> Result<PreparedCorpus, EvalError> {
    let refs = corpus.utterances();
    let utterances = par::try_map(&refs, |r| prepare_one(corpus, r, cfg))?;
    Ok(PreparedCorpus { corpus_id: corpus.id.clone(), speakers: corpus.speakers.clone(), utterances })
}

struct Cell<'a> {
    approach: Approach,
    condition: Condition,
    items: Vec<FoldItem>,
    rows: Vec<&'a [Vec<f64>]>,
    skipped: Vec<String>,
    folds: Vec<Vec<Fold>>,
}

fn build_cell<'a>(prep: &'a PreparedCorpus, approach: Approach, condition: Condition, cfg: &AuditConfig) -> Result<Cell<'a>, EvalError> {
    let mut items = Vec::new();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for u in &prep.utterances {
        match u.features.get(&(approach, condition)) {
            Some(Some(r)) => {
                items.push(FoldItem { id: u.utterance_id.clone(), speaker_index: u.speaker_index, group: u.group });
                rows.push(r.as_slice());
            }
            Some(None) => skipped.push(u.utterance_id.clone()),
            None => return Err(EvalError::Config(format!("{approach}/{condition} was not prepared"))),
        }
    }
    for (s, spk) in prep.speakers.iter().enumerate() {
        if !items.iter().any(|it| it.speaker_index == s) {
            return Err(EvalError::NoUsableItems { speaker_id: spk.speaker_id.clone(), condition, approach });
        }
    }
    let groups: Vec<Group> = prep.speakers.iter().map(|s| s.group).collect();
    let folds = cfg.seeds.iter().map(|&seed| make_loso_folds(&items, &groups, seed, cfg.val_fraction)).collect::<Result<_, _>>()?;
    Ok(Cell { approach, condition, items, rows, skipped, folds })
}

fn gather(cell: &Cell, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &i in idx {
        for r in cell.rows[i] {
            x.push(r.clone());
            y.push(cell.items[i].group.class());
        }
    }
    (x, y)
}

fn to_sign(y: &[usize]) -> Vec<i8> {
    y.iter().map(|&c| if c == 1 { 1 } else { -1 }).collect()
}

/// Predicted class of the fold's test speaker; every fitted transform and
/// model sees only the fold's train and validation items.
fn run_fold(cell: &Cell, fold: &Fold, seed: u64, cfg: &AuditConfig) -> Result<usize, EvalError> {
    let (tx, ty) = gather(cell, &fold.train);
    let (vx, vy) = gather(cell, &fold.val);
    let (test_x, _) = gather(cell, &fold.test);
    let st = Standardizer::fit(&tx)?;
    let (mut tx, mut vx, mut test_x) = (st.apply_all(&tx)?, st.apply_all(&vx)?, st.apply_all(&test_x)?);
    if cell.approach == Approach::SvmPcaStack {
        let pca = Pca::fit(&tx, DEFAULT_VARIANCE_RATIO)?;
        let project = |rows: &[Vec<f64>]| rows.iter().map(|r| pca.apply(r)).collect::<Result<Vec<_>, _>>();
        tx = project(&tx)?;
        vx = project(&vx)?;
        test_x = project(&test_x)?;
    }
    let predictions: Vec<usize> = if cell.approach.is_svm() {
        let grid = grid_search_svm(&tx, &to_sign(&ty), &vx, &to_sign(&vy), &cfg.grid)?;
        test_x.iter().map(|x| svm_predict(&grid.model, x).map(|(l, _)| usize::from(l > 0))).collect::<Result<_, _>>()?
    } else {
        let params = cfg.mlp.params(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(fold.test_speaker as u64));
        let model = mlp_train(&tx, &ty, &vx, &vy, &params)?.model;
        test_x.iter().map(|x| mlp_predict(&model, x).map(|(l, _)| l)).collect::<Result<_, _>>()?
    };
    majority_vote(&predictions)
}

/// Runs every (approach, condition) cell; all folds of all seeds of all
/// cells are independent work units.
pub fn run_conditions(prep: &PreparedCorpus, cells: &[(Approach, Condition)], cfg: &AuditConfig) -> Result<Vec<ConditionResult>, EvalError> {
    let built: Vec<Cell> = cells.iter().map(|&(a, c)| build_cell(prep, a, c, cfg)).collect::<Result<_, _>>()?;
    let n_speakers = prep.speakers.len();
    let tasks: Vec<(usize, usize, usize)> = (0..built.len())
        .flat_map(|c| (0..cfg.seeds.len()).flat_map(move |s| (0..n_speakers).map(move |f| (c, s, f))))
        .collect();
    let predicted = par::try_map(&tasks, |&(c, s, f)| run_fold(&built[c], &built[c].folds[s][f], cfg.seeds[s], cfg))?;

    let mut out = Vec::with_capacity(built.len());
    for (c, cell) in built.iter().enumerate() {
        let base = c * cfg.seeds.len() * n_speakers;
        let speakers = prep
            .speakers
            .iter()
            .enumerate()
            .map(|(f, spk)| SpeakerPrediction {
                speaker_id: spk.speaker_id.clone(),
                group: spk.group,
                predicted: (0..cfg.seeds.len()).map(|s| Group::from_class(predicted[base + s * n_speakers + f])).collect(),
            })
            .collect();
        out.push(ConditionResult::from_predictions(
            cell.approach,
            cell.condition,
            cfg.seeds.clone(),
            speakers,
            cell.items.len(),
            cell.skipped.clone(),
        ));
    }
    Ok(out)
}

pub fn run_condition(prep: &PreparedCorpus, condition: Condition, approach: Approach, cfg: &AuditConfig) -> Result<ConditionResult, EvalError> {
    Ok(run_conditions(prep, &[(approach, condition)], cfg)?.remove(0))
}

/// Full audit of the corpus named by `cfg.manifest`.
pub fn run_audit(cfg: &AuditConfig) -> Result<AuditReport, EvalError> {
    cfg.validate()?;
    let corpus = Corpus::open(&cfg.manifest)?;
    let prep = prepare_corpus(&corpus, cfg)?;
    let mut conditions = cfg.conditions.clone();
    conditions.sort();
    conditions.dedup();
    let mut approaches = cfg.approaches.clone();
    approaches.dedup();
    let cells: Vec<(Approach, Condition)> =
        approaches.iter().flat_map(|&a| conditions.iter().map(move |&c| (a, c))).collect();
    let results = run_conditions(&prep, &cells, cfg)?;
    let snr = group_snr_stats(prep.utterances.iter().map(|u| (u.group, u.snr.snr_db)))?;
    let flags = compare_conditions(&results, &snr)?;
    Ok(AuditReport {
        corpus_id: prep.corpus_id.clone(),
        n_speakers: prep.speakers.len(),
        n_utterances: prep.utterances.len(),
        snr,
        results,
        flags,
        config: cfg.clone(),
    })
}
