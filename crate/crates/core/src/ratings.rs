//! Rating weak models against a labeled training set.
//!
//! Ratings are kept as exact capture counts; the real-valued ratings
//! `r_i = |m ∩ TR_i| / |TR_i|`, enrichments and posteriors are views over
//! those counts, and "not enriched" is decided by integer comparison.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SdError};
use crate::geometry::{LabeledDataset, WeakModel};
use crate::rational::{ratio, Rational};

/// An ordered class pair `(i, j)`, classes numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
}

impl Pair {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == 0 || j == 0 || i == j {
            return Err(SdError::InvalidConfig(format!("invalid class pair ({i}, {j})")));
        }
        Ok(Pair { i, j })
    }

    /// Same pair with `i < j`.
    pub fn canonical(self) -> Self {
        if self.i < self.j {
            self
        } else {
            Pair { i: self.j, j: self.i }
        }
    }

    pub fn reversed(self) -> Self {
        Pair { i: self.j, j: self.i }
    }

    /// All unordered pairs `(i, j)`, `i < j`, in lexicographic order.
    pub fn all(n_classes: usize) -> Vec<Pair> {
        (1..=n_classes).flat_map(|i| (i + 1..=n_classes).map(move |j| Pair { i, j })).collect()
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.i, self.j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRating {
    captured: Vec<usize>,
    class_sizes: Vec<usize>,
}

impl ModelRating {
    pub fn from_counts(captured: Vec<usize>, class_sizes: Vec<usize>) -> Result<Self> {
        if captured.len() != class_sizes.len() || captured.is_empty() {
            return Err(SdError::InvalidModel("rating needs one count per class".into()));
        }
        for (c, (&k, &n)) in captured.iter().zip(&class_sizes).enumerate() {
            if n == 0 {
                return Err(SdError::EmptyClass { class: c + 1 });
            }
            if k > n {
                return Err(SdError::InvalidModel(format!("class {}: captured {k} of {n}", c + 1)));
            }
        }
        Ok(ModelRating { captured, class_sizes })
    }

    pub fn n_classes(&self) -> usize {
        self.captured.len()
    }

    /// `|m ∩ TR_class|`
    pub fn captured(&self, class: usize) -> usize {
        self.captured[class - 1]
    }

    pub fn class_size(&self, class: usize) -> usize {
        self.class_sizes[class - 1]
    }

    pub fn captured_counts(&self) -> &[usize] {
        &self.captured
    }

    pub fn class_sizes(&self) -> &[usize] {
        &self.class_sizes
    }

    /// `r_i`
    pub fn rating(&self, class: usize) -> f64 {
        self.captured(class) as f64 / self.class_size(class) as f64
    }

    pub fn rating_exact(&self, class: usize) -> Rational {
        ratio(self.captured(class) as i128, self.class_size(class) as i128)
    }

    /// `d_ij = r_i - r_j`
    pub fn enrichment(&self, pair: Pair) -> f64 {
        self.rating(pair.i) - self.rating(pair.j)
    }

    pub fn enrichment_exact(&self, pair: Pair) -> Rational {
        self.rating_exact(pair.i) - self.rating_exact(pair.j)
    }

    /// `d_ij != 0`, decided on integer counts.
    pub fn is_enriched(&self, pair: Pair) -> bool {
        self.captured(pair.i) * self.class_size(pair.j) != self.captured(pair.j) * self.class_size(pair.i)
    }

    /// Whether the model captures any training point at all.
    pub fn covers_training(&self) -> bool {
        self.captured.iter().any(|&k| k > 0)
    }

    /// `r'_i = |m ∩ TR_i| / |m ∩ TR|`, undefined for models capturing nothing.
    pub fn posterior(&self, class: usize) -> Option<f64> {
        let total: usize = self.captured.iter().sum();
        (total > 0).then(|| self.captured(class) as f64 / total as f64)
    }

    pub fn posterior_exact(&self, class: usize) -> Option<Rational> {
        let total: usize = self.captured.iter().sum();
        (total > 0).then(|| ratio(self.captured(class) as i128, total as i128))
    }
}

/// Rates `m` on every class of `ds`.
pub fn rate(m: &WeakModel, ds: &LabeledDataset) -> Result<ModelRating> {
    let sizes = ds.class_sizes();
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(SdError::EmptyClass { class: c + 1 });
    }
    let mut captured = vec![0; ds.n_classes()];
    for (p, &c) in ds.points().iter().zip(ds.labels()) {
        if m.contains(p)? {
            captured[c - 1] += 1;
        }
    }
    ModelRating::from_counts(captured, sizes)
}

/// `X_ij(q, m)`: `(C - r_j) / (r_i - r_j)`, or 0 for unenriched models.
pub fn x_value(rating: &ModelRating, in_model: bool, pair: Pair) -> f64 {
    if !rating.is_enriched(pair) {
        return 0.0;
    }
    let c = if in_model { 1.0 } else { 0.0 };
    let (ri, rj) = (rating.rating(pair.i), rating.rating(pair.j));
    (c - rj) / (ri - rj)
}

pub fn x_value_exact(rating: &ModelRating, in_model: bool, pair: Pair) -> Rational {
    if !rating.is_enriched(pair) {
        return Rational::from_integer(0);
    }
    let c = Rational::from_integer(i128::from(in_model));
    let (ri, rj) = (rating.rating_exact(pair.i), rating.rating_exact(pair.j));
    (c - rj) / (ri - rj)
}

/// `2X - 1`, moving the poles to +1/-1. Unenriched models stay at 0.
pub fn x_value_rescaled(rating: &ModelRating, in_model: bool, pair: Pair) -> f64 {
    if !rating.is_enriched(pair) {
        return 0.0;
    }
    2.0 * x_value(rating, in_model, pair) - 1.0
}

pub fn x_value_rescaled_exact(rating: &ModelRating, in_model: bool, pair: Pair) -> Rational {
    if !rating.is_enriched(pair) {
        return Rational::from_integer(0);
    }
    rescale_exact(x_value_exact(rating, in_model, pair))
}

/// The affine map `x -> 2x - 1`.
pub fn rescale_exact(x: Rational) -> Rational {
    x * 2 - 1
}
