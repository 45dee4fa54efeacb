//! Subject-level cross-validation splits. Every subject lands in exactly one
//! validation fold, so no subject's segments appear on both sides of a split.

use std::collections::BTreeSet;

use crate::error::{Result, SqaError};
use crate::rng::SplitMix64;

#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub train_subjects: Vec<String>,
    pub val_subjects: Vec<String>,
}

/// Seed for fold-local randomness (init, dropout, batch order). Distinct per
/// fold and disjoint across global seeds below 1000 folds.
pub fn fold_seed(global_seed: u64, fold: usize) -> u64 {
    global_seed
        .wrapping_mul(1000)
        .wrapping_add(fold as u64)
}

/// Shuffle the unique subject ids with `seed` and deal them into `folds`
/// nearly equal validation groups (sizes differ by at most one).
pub fn split_subjects(subjects: &[String], folds: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    let unique: BTreeSet<&String> = subjects.iter().collect();
    let n = unique.len();
    if folds < 2 || n < folds {
        return Err(SqaError::TooFewSubjects { subjects: n, folds });
    }
    let mut order: Vec<String> = unique.into_iter().cloned().collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let base = n / folds;
    let extra = n % folds;
    let mut splits = Vec::with_capacity(folds);
    let mut cursor = 0usize;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let val: Vec<String> = order[cursor..cursor + size].to_vec();
        cursor += size;
        let mut train: Vec<String> = order
            .iter()
            .filter(|s| !val.contains(s))
            .cloned()
            .collect();
        train.sort();
        let mut val = val;
        val.sort();
        splits.push(FoldSplit {
            train_subjects: train,
            val_subjects: val,
        });
    }
    Ok(splits)
}
