use serde::Serialize;

use super::RatedModel;
use crate::error::Result;
use crate::geometry::Point;
use crate::ratings::{x_value_exact, Pair};
use crate::rational::{ratio, Rational};

/// Coverage of one point by the models of each rating value `r_i = k/|TR_i|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageProfile {
    pub class: usize,
    pub class_size: usize,
    /// `t_r`, indexed by captured count `k = 0..=|TR_i|`.
    pub group_sizes: Vec<usize>,
    /// `N_{M_t,r,TR_i}(q)`
    pub counts: Vec<usize>,
}

impl CoverageProfile {
    pub fn t(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn r_value(&self, k: usize) -> Rational {
        ratio(k as i128, self.class_size as i128)
    }

    /// `f = N / t_r`; an empty stratum reports 0.
    pub fn ratio(&self, k: usize) -> Rational {
        match self.group_sizes[k] {
            0 => Rational::from_integer(0),
            g => ratio(self.counts[k] as i128, g as i128),
        }
    }

    pub fn ratios(&self) -> Vec<Rational> {
        (0..self.group_sizes.len()).map(|k| self.ratio(k)).collect()
    }
}

/// Stratified coverage of `q` by `models`, grouped by their rating on `class`.
pub fn profile(models: &[RatedModel], class: usize, class_size: usize, q: &Point) -> Result<CoverageProfile> {
    let mut group_sizes = vec![0; class_size + 1];
    let mut counts = vec![0; class_size + 1];
    for e in models {
        let k = e.rating.captured(class);
        group_sizes[k] += 1;
        if e.model.contains(q)? {
            counts[k] += 1;
        }
    }
    Ok(CoverageProfile { class, class_size, group_sizes, counts })
}

/// One term of `Y_ij = sum_x (t_x / t) * mean_x(X_ij)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct YStratum {
    /// `r_i` of the models in this group.
    pub r: Rational,
    pub size: usize,
    /// `t_x / t`
    pub weight: Rational,
    /// Mean of `X_ij` over the group; `None` for an empty group.
    pub mean: Option<Rational>,
}

/// Splits `Y_ij(q)` over the models of `pair` by their value of `r_i`.
pub fn decompose_y(models: &[RatedModel], q: &Point, pair: Pair, class_size_i: usize) -> Result<Vec<YStratum>> {
    let canon = pair.canonical();
    let mut sums = vec![Rational::from_integer(0); class_size_i + 1];
    let mut sizes = vec![0usize; class_size_i + 1];
    let mut t = 0usize;
    for e in models.iter().filter(|e| e.pair.canonical() == canon) {
        let k = e.rating.captured(pair.i);
        sizes[k] += 1;
        sums[k] += x_value_exact(&e.rating, e.model.contains(q)?, pair);
        t += 1;
    }
    Ok((0..=class_size_i)
        .map(|k| YStratum {
            r: ratio(k as i128, class_size_i as i128),
            size: sizes[k],
            weight: if t == 0 { Rational::from_integer(0) } else { ratio(sizes[k] as i128, t as i128) },
            mean: (sizes[k] > 0).then(|| sums[k] / sizes[k] as i128),
        })
        .collect())
}

/// `sum weight * mean` over the strata.
pub fn recombine(strata: &[YStratum]) -> Rational {
    strata.iter().filter_map(|s| s.mean.map(|m| m * s.weight)).fold(Rational::from_integer(0), |a, b| a + b)
}
