use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, QuestionPost};

/// How many posts go to each partition. Test takes the newest posts,
/// validation the block just before it, and train what precedes that.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SplitPlan {
    /// `train: None` takes every remaining post.
    Counts {
        train: Option<usize>,
        validation: usize,
        test: usize,
    },
    /// Fractions of the corpus, rounded down; train is the remainder.
    Ratios { validation: f64, test: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitDates {
    pub validation_start: Option<DateTime<Utc>>,
    pub test_start: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatasetSplit {
    pub train: Vec<u64>,
    pub validation: Vec<u64>,
    pub test: Vec<u64>,
    pub split_dates: SplitDates,
}

/// Time-wise partition over posts ordered by `(creation_date, id)`.
/// Each list is in that order.
pub fn split_chronological(posts: &[QuestionPost], plan: SplitPlan) -> Result<DatasetSplit, CorpusError> {
    let mut ids = BTreeSet::new();
    for p in posts {
        if !ids.insert(p.id) {
            return Err(CorpusError::DuplicateId(p.id));
        }
    }
    let n = posts.len();
    let (train, validation, test) = match plan {
        SplitPlan::Counts { train, validation, test } => {
            let fixed = validation.checked_add(test).ok_or(CorpusError::InvalidSplit("counts overflow"))?;
            let requested = match train {
                Some(t) => fixed.checked_add(t).ok_or(CorpusError::InvalidSplit("counts overflow"))?,
                None => fixed,
            };
            if requested > n {
                return Err(CorpusError::InsufficientData { requested, available: n });
            }
            (train.unwrap_or(n - fixed), validation, test)
        }
        SplitPlan::Ratios { validation, test } => {
            let ok = |r: f64| (0.0..=1.0).contains(&r);
            if !ok(validation) || !ok(test) || validation + test > 1.0 {
                return Err(CorpusError::InvalidSplit("ratios must lie in [0, 1] and sum to at most 1"));
            }
            let v = (validation * n as f64) as usize;
            let t = (test * n as f64) as usize;
            (n - v - t, v, t)
        }
    };

    let mut order: Vec<(DateTime<Utc>, u64)> = posts.iter().map(|p| (p.creation_date, p.id)).collect();
    order.sort_unstable();
    let test_from = n - test;
    let val_from = test_from - validation;
    let train_from = val_from - train;
    let ids_of = |r: core::ops::Range<usize>| order[r].iter().map(|&(_, id)| id).collect::<Vec<_>>();
    Ok(DatasetSplit {
        train: ids_of(train_from..val_from),
        validation: ids_of(val_from..test_from),
        test: ids_of(test_from..n),
        split_dates: SplitDates {
            validation_start: (validation > 0).then(|| order[val_from].0),
            test_start: (test > 0).then(|| order[test_from].0),
        },
    })
}

/// A seeded `1/denominator` subset of `train`, preserving input order.
/// Subsets for one seed are nested: the half contains the quarter.
pub fn sample_fraction(train: &[u64], denominator: usize, seed: u64) -> Result<Vec<u64>, CorpusError> {
    if denominator == 0 {
        return Err(CorpusError::InvalidSplit("fraction denominator must be positive"));
    }
    let mut positions: Vec<usize> = (0..train.len()).collect();
    positions.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    positions.truncate(train.len() / denominator);
    positions.sort_unstable();
    Ok(positions.into_iter().map(|i| train[i]).collect())
}
