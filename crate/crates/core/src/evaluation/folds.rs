use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::Group;

/// One classifiable item (an utterance) of the pooled corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldItem {
    pub id: String,
    pub speaker_index: usize,
    pub group: Group,
}

/// Indices into the item list a fold was built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub test_speaker: usize,
    pub test: Vec<usize>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// One fold per speaker. The other speakers' items are pooled, shuffled per
/// group with a stream derived from `(seed, test speaker)`, and split so that
/// `val_fraction` of each group (rounded, at least one item when the group
/// has two or more) goes to validation.
pub fn make_loso_folds(
    items: &[FoldItem],
    speaker_groups: &[Group],
    seed: u64,
    val_fraction: f64,
) -> Result<Vec<Fold>, EvalError> {
    if speaker_groups.len() < 3 {
        return Err(EvalError::TooFewSpeakers { got: speaker_groups.len() });
    }
    for g in [Group::A, Group::B] {
        if !speaker_groups.contains(&g) {
            return Err(EvalError::MissingGroup(g));
        }
    }
    if let Some(bad) = items.iter().find(|it| it.speaker_index >= speaker_groups.len()) {
        return Err(EvalError::UnknownSpeaker(bad.id.clone()));
    }
    let folds = (0..speaker_groups.len())
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let test: Vec<usize> = (0..items.len()).filter(|&i| items[i].speaker_index == s).collect();
            let mut train = Vec::new();
            let mut val = Vec::new();
            for g in [Group::A, Group::B] {
                let mut pool: Vec<usize> =
                    (0..items.len()).filter(|&i| items[i].speaker_index != s && items[i].group == g).collect();
                pool.shuffle(&mut rng);
                let n_val = validation_count(pool.len(), val_fraction);
                val.extend_from_slice(&pool[..n_val]);
                train.extend_from_slice(&pool[n_val..]);
            }
            train.sort_unstable();
            val.sort_unstable();
            Fold { test_speaker: s, test, train, val }
        })
        .collect();
    Ok(folds)
}

fn validation_count(n: usize, fraction: f64) -> usize {
    if n < 2 {
        return 0;
    }
    ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
}

/// Most frequent class; an exact tie goes to class 1.
pub fn majority_vote(labels: &[usize]) -> Result<usize, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::EmptyVote);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(EvalError::InvalidLabel(bad));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    Ok(usize::from(2 * ones >= labels.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n_speakers: usize, per: usize) -> (Vec<FoldItem>, Vec<Group>) {
        let groups: Vec<Group> = (0..n_speakers).map(|s| if s < n_speakers / 2 { Group::A } else { Group::B }).collect();
        let items = (0..n_speakers)
            .flat_map(|s| (0..per).map(move |u| (s, u)))
            .map(|(s, u)| FoldItem { id: format!("s{s}_u{u}"), speaker_index: s, group: groups[s] })
            .collect();
        (items, groups)
    }

    #[test]
    fn one_fold_per_speaker_without_leakage() {
        let (items, groups) = corpus(7, 9);
        let folds = make_loso_folds(&items, &groups, 17, 0.1).unwrap();
        assert_eq!(folds.len(), 7);
        for f in &folds {
            assert!(f.test.iter().all(|&i| items[i].speaker_index == f.test_speaker));
            assert!(f.train.iter().chain(&f.val).all(|&i| items[i].speaker_index != f.test_speaker));
            assert_eq!(f.test.len() + f.train.len() + f.val.len(), items.len());
        }
    }

    #[test]
    fn twenty_item_pool_splits_18_2() {
        // the test speaker's 10 items leave 10 per group in the pool
        let (items, groups) = corpus(3, 10);
        let folds = make_loso_folds(&items, &[groups[0], groups[0], Group::B], 1, 0.1).unwrap();
        let f = &folds[0];
        assert_eq!(f.train.len() + f.val.len(), 20);
        assert!((f.val.len() as i64 - 2).abs() <= 1);
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let (items, groups) = corpus(10, 40);
        let a = make_loso_folds(&items, &groups, 42, 0.1).unwrap();
        let b = make_loso_folds(&items, &groups, 42, 0.1).unwrap();
        let c = make_loso_folds(&items, &groups, 43, 0.1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].val, c[0].val);
        for f in &a {
            let val_a = f.val.iter().filter(|&&i| items[i].group == Group::A).count();
            let val_b = f.val.len() - val_a;
            let pool_a = f.train.iter().chain(&f.val).filter(|&&i| items[i].group == Group::A).count();
            let pool_b = f.train.len() + f.val.len() - pool_a;
            assert_eq!(val_a, (pool_a as f64 * 0.1).round() as usize);
            assert_eq!(val_b, (pool_b as f64 * 0.1).round() as usize);
        }
    }

    #[test]
    fn needs_three_speakers_and_both_groups() {
        let (items, groups) = corpus(2, 3);
        assert!(matches!(make_loso_folds(&items, &groups, 1, 0.1), Err(EvalError::TooFewSpeakers { got: 2 })));
        assert!(matches!(make_loso_folds(&[], &[Group::A; 3], 1, 0.1), Err(EvalError::MissingGroup(Group::B))));
    }

    #[test]
    fn votes() {
        assert_eq!(majority_vote(&[1, 1, 0]).unwrap(), 1);
        assert_eq!(majority_vote(&[0, 0, 1]).unwrap(), 0);
        assert_eq!(majority_vote(&[0, 1]).unwrap(), 1);
        assert!(majority_vote(&[]).is_err());
        let many: Vec<usize> = (0..721).map(|i| usize::from(i % 3 == 0)).collect();
        assert_eq!(majority_vote(&many).unwrap(), 0);
    }
}
