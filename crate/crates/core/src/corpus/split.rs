use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, IgtExample, ParallelPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        })
    }
}

/// Anything carrying a stable example id.
pub trait Identified {
    fn id(&self) -> &str;
}

impl Identified for ParallelPair {
    fn id(&self) -> &str {
        &self.id
    }
}

impl Identified for IgtExample {
    fn id(&self) -> &str {
        &self.id
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit<T> {
    pub name: SplitName,
    pub examples: Vec<T>,
}

impl<T: Identified> DatasetSplit<T> {
    /// Fails on a repeated id.
    pub fn new(name: SplitName, examples: Vec<T>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for ex in &examples {
            if !seen.insert(ex.id()) {
                return Err(CorpusError::DuplicateId(ex.id().to_string()));
            }
        }
        Ok(DatasetSplit { name, examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Checks that no id appears in more than one split.
pub fn check_disjoint<T: Identified>(splits: &[&DatasetSplit<T>]) -> Result<(), CorpusError> {
    let mut owner: HashMap<&str, SplitName> = HashMap::new();
    for split in splits {
        for ex in &split.examples {
            if let Some(&first) = owner.get(ex.id()) {
                return Err(CorpusError::OverlappingSplits {
                    id: ex.id().to_string(),
                    first,
                    second: split.name,
                });
            }
            owner.insert(ex.id(), split.name);
        }
    }
    Ok(())
}

/// Seeded shuffle into train and dev; `dev_fraction` of the examples
/// (rounded) go to dev.
pub fn split_train_dev<T: Identified + Clone>(
    examples: &[T],
    dev_fraction: f64,
    seed: u64,
) -> Result<(DatasetSplit<T>, DatasetSplit<T>), CorpusError> {
    assert!((0.0..=1.0).contains(&dev_fraction), "dev_fraction out of range");
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_dev = (examples.len() as f64 * dev_fraction).round() as usize;
    let (dev_idx, train_idx) = order.split_at(n_dev);
    let pick = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| examples[i].clone()).collect::<Vec<_>>()
    };
    let train = DatasetSplit::new(SplitName::Train, pick(train_idx))?;
    let dev = DatasetSplit::new(SplitName::Dev, pick(dev_idx))?;
    Ok((train, dev))
}
