use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitUnit {
    #[default]
    Transcript,
    Participant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub unit: SplitUnit,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.81,
            val_fraction: 0.09,
            test_fraction: 0.10,
            seed: 0,
            unit: SplitUnit::Transcript,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let fr = [self.train_fraction, self.val_fraction, self.test_fraction];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(EvalError::InvalidSplit(format!(
                "fractions {fr:?} must lie in [0, 1] and sum to 1"
            )));
        }
        Ok(())
    }

    /// Slice sizes for `n` units: floor of the train and validation shares,
    /// remainder to test.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let floor = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
        let train = floor(self.train_fraction).min(n);
        let val = floor(self.val_fraction).min(n - train);
        (train, val, n - train - val)
    }
}

/// Index partition of a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle then contiguous slicing. `participant_ids[i]` belongs to
/// item `i`; with [`SplitUnit::Participant`] whole participants are
/// shuffled and sliced.
pub fn split(participant_ids: &[&str], spec: &SplitSpec) -> Result<Split, EvalError> {
    spec.validate()?;
    if participant_ids.is_empty() {
        return Err(EvalError::TooSmall { n: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let groups: Vec<Vec<usize>> = match spec.unit {
        SplitUnit::Transcript => (0..participant_ids.len()).map(|i| vec![i]).collect(),
        SplitUnit::Participant => {
            let mut by: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, p) in participant_ids.iter().enumerate() {
                by.entry(p).or_default().push(i);
            }
            by.into_values().collect()
        }
    };
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(&mut rng);
    let (n_train, n_val, n_test) = spec.sizes(groups.len());
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(EvalError::TooSmall { n: groups.len() });
    }
    let expand = |range: &[usize]| -> Vec<usize> { range.iter().flat_map(|&g| groups[g].iter().copied()).collect() };
    Ok(Split {
        train: expand(&order[..n_train]),
        val: expand(&order[n_train..n_train + n_val]),
        test: expand(&order[n_train + n_val..]),
    })
}
