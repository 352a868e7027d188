//! Ordered accumulation of rated weak models and the discriminants built
//! on top of it.
//!
//! An [`Ensemble`] is the sequence `M_t = (m_1, ..., m_t)` together with the
//! rating of each model on one fixed training set. Each model is tagged with
//! the class pair it was accepted for; the pairwise discriminant `Y_ij`
//! averages over the models of that pair, while `W_i` averages posterior
//! ratings over every covering model.

mod persist;
mod profile;
mod state;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use persist::{read_ensemble, write_ensemble, FORMAT_TAG, FORMAT_VERSION};
pub use profile::{decompose_y, profile, recombine, CoverageProfile, YStratum};
pub use state::{Decision, DecisionRule, DiscriminantState, Precision, UndecidedPolicy};

use crate::error::{Result, SdError};
use crate::geometry::{LabeledDataset, Point, WeakModel};
use crate::ratings::{rate, ModelRating, Pair};
use crate::rational::Rational;

/// Facts about the training set the ratings were computed on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub dataset_checksum: String,
    pub n_classes: usize,
    pub class_sizes: Vec<usize>,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl TrainingInfo {
    pub fn of(ds: &LabeledDataset) -> Self {
        TrainingInfo {
            dataset_checksum: ds.checksum(),
            n_classes: ds.n_classes(),
            class_sizes: ds.class_sizes(),
            dim: ds.dim(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatedModel {
    pub model: WeakModel,
    pub rating: ModelRating,
    /// The class pair this model was accepted for.
    pub pair: Pair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    training: TrainingInfo,
    entries: Vec<RatedModel>,
}

impl Ensemble {
    pub fn new(training: TrainingInfo) -> Self {
        Ensemble { training, entries: Vec::new() }
    }

    pub fn for_dataset(ds: &LabeledDataset) -> Self {
        Ensemble::new(TrainingInfo::of(ds))
    }

    pub fn training(&self) -> &TrainingInfo {
        &self.training
    }

    pub fn set_seed(&mut self, seed: Option<u64>) {
        self.training.seed = seed;
    }

    /// Appends `m_{t+1}`. The rating must come from the ensemble's training set.
    pub fn push(&mut self, model: WeakModel, rating: ModelRating, pair: Pair) -> Result<()> {
        if rating.class_sizes() != self.training.class_sizes.as_slice() {
            return Err(SdError::InvalidModel(format!(
                "model {}: rating class sizes {:?} do not match training set {:?}",
                model.id(),
                rating.class_sizes(),
                self.training.class_sizes
            )));
        }
        if pair.i > self.training.n_classes || pair.j > self.training.n_classes {
            return Err(SdError::ClassOutOfRange { class: pair.i.max(pair.j), n_classes: self.training.n_classes });
        }
        self.entries.push(RatedModel { model, rating, pair });
        Ok(())
    }

    /// Rates `model` on `ds` and appends it.
    pub fn push_rated(&mut self, model: WeakModel, ds: &LabeledDataset, pair: Pair) -> Result<()> {
        let rating = rate(&model, ds)?;
        self.push(model, rating, pair)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn models(&self) -> &[RatedModel] {
        &self.entries
    }

    /// `M_t`, the first `t` models.
    pub fn prefix(&self, t: usize) -> &[RatedModel] {
        &self.entries[..t.min(self.entries.len())]
    }

    /// Replays every model over `points`.
    pub fn evaluate(&self, points: &[Point], precision: Precision) -> Result<DiscriminantState> {
        let mut state = DiscriminantState::new(points.to_vec(), &self.training, precision);
        for e in &self.entries {
            state.push(e)?;
        }
        Ok(state)
    }

    pub fn profile(&self, class: usize, q: &Point) -> Result<CoverageProfile> {
        let size = self.class_size(class)?;
        profile(&self.entries, class, size, q)
    }

    pub fn decompose_y(&self, q: &Point, pair: Pair) -> Result<Vec<YStratum>> {
        let size = self.class_size(pair.i)?;
        self.class_size(pair.j)?;
        decompose_y(&self.entries, q, pair, size)
    }

    fn class_size(&self, class: usize) -> Result<usize> {
        if class == 0 || class > self.training.n_classes {
            return Err(SdError::ClassOutOfRange { class, n_classes: self.training.n_classes });
        }
        Ok(self.training.class_sizes[class - 1])
    }

    /// Number of models per value of `r_class`, indexed by captured count.
    pub fn stratum_counts(&self, class: usize) -> Result<Vec<usize>> {
        let size = self.class_size(class)?;
        let mut counts = vec![0; size + 1];
        for e in &self.entries {
            counts[e.rating.captured(class)] += 1;
        }
        Ok(counts)
    }

    /// Model counts per arrangement of posterior ratings `(r'_1, ..., r'_n)`.
    /// The ensemble is balanced when every permutation of a rating vector
    /// occurs equally often; nothing is rebalanced here.
    pub fn balance(&self) -> BalanceReport {
        let mut groups: BTreeMap<Vec<Rational>, BTreeMap<Vec<Rational>, usize>> = BTreeMap::new();
        for e in &self.entries {
            let post: Option<Vec<Rational>> =
                (1..=self.training.n_classes).map(|c| e.rating.posterior_exact(c)).collect();
            let Some(post) = post else { continue };
            let mut key = post.clone();
            key.sort_unstable_by(|a, b| b.cmp(a));
            *groups.entry(key).or_default().entry(post).or_default() += 1;
        }
        let groups = groups
            .into_iter()
            .map(|(key, arrangements)| {
                let possible = distinct_permutations(&key);
                let max = arrangements.values().copied().max().unwrap_or(0);
                let min = if (arrangements.len() as u64) < possible {
                    0
                } else {
                    arrangements.values().copied().min().unwrap_or(0)
                };
                PermutationGroup {
                    posterior: key.iter().map(ToString::to_string).collect(),
                    arrangements: arrangements
                        .into_iter()
                        .map(|(k, v)| (k.iter().map(ToString::to_string).collect::<Vec<_>>().join(","), v))
                        .collect(),
                    distinct_permutations: possible,
                    imbalance: max - min,
                }
            })
            .collect();
        BalanceReport { groups }
    }
}

fn distinct_permutations(sorted: &[Rational]) -> u64 {
    // multinomial: product of C(placed + run, run) over runs of equal values
    let mut result: u64 = 1;
    let mut placed = 0u64;
    for run in sorted.chunk_by(|a, b| a == b) {
        for r in 1..=run.len() as u64 {
            result = result * (placed + r) / r;
        }
        placed += run.len() as u64;
    }
    result
}

/// Per-permutation-class model counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub groups: Vec<PermutationGroup>,
}

impl BalanceReport {
    pub fn max_imbalance(&self) -> usize {
        self.groups.iter().map(|g| g.imbalance).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationGroup {
    /// Posterior ratings sorted in decreasing order.
    pub posterior: Vec<String>,
    /// Count per observed arrangement, keyed `"r'_1,r'_2,..."`.
    pub arrangements: BTreeMap<String, usize>,
    pub distinct_permutations: u64,
    /// Largest minus smallest count over all arrangements, unseen ones counting 0.
    pub imbalance: usize,
}
