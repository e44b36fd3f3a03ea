use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::preprocess::EpochDataset;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train_subjects: BTreeSet<String>,
    pub test_subjects: BTreeSet<String>,
}

/// Sorts the distinct subjects, shuffles them with `seed`, and deals them
/// round-robin into `k` test groups.
pub fn subject_folds<S: AsRef<str>>(
    subject_keys: &[S],
    k: usize,
    seed: u64,
) -> Result<Vec<FoldSplit>, TrainError> {
    let unique: BTreeSet<String> = subject_keys
        .iter()
        .map(|s| s.as_ref().to_string())
        .collect();
    if k == 0 || unique.len() < k {
        return Err(TrainError::TooFewSubjects {
            subjects: unique.len(),
            folds: k,
        });
    }
    let mut order: Vec<String> = unique.iter().cloned().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut groups = vec![BTreeSet::new(); k];
    for (i, s) in order.into_iter().enumerate() {
        groups[i % k].insert(s);
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(fold_index, test)| FoldSplit {
            fold_index,
            train_subjects: unique.difference(&test).cloned().collect(),
            test_subjects: test,
        })
        .collect())
}

/// Epoch indices on the (train, test) sides of a split. Epochs of subjects
/// in neither set are ignored.
pub fn split_indices(
    dataset: &EpochDataset,
    split: &FoldSplit,
) -> Result<(Vec<usize>, Vec<usize>), TrainError> {
    if let Some(s) = split
        .train_subjects
        .intersection(&split.test_subjects)
        .next()
    {
        return Err(TrainError::SubjectLeak(s.clone()));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, key) in dataset.subject_keys.iter().enumerate() {
        if split.test_subjects.contains(key) {
            test.push(i);
        } else if split.train_subjects.contains(key) {
            train.push(i);
        }
    }
    Ok((train, test))
}
