//! Full-enumeration oracle over all k-subsets of a small reference set.
//!
//! Deliberately self-contained: subsets are bitmasks and every quantity is
//! counted directly, so it can check the ensemble code path from outside.

use serde::Serialize;

use crate::error::{Result, SdError};
use crate::rational::{ratio, Rational};

pub const ORACLE_MAX_N: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub n: usize,
    pub k: usize,
    /// Number of models, `C(n, k)`.
    pub t: usize,
    /// Models with `r_1 != r_2`.
    pub enriched: usize,
    /// Fraction of models containing each point.
    pub coverage: Vec<Rational>,
    /// `Y_12` of each point over all models.
    pub y12: Vec<Rational>,
    /// For each point, `f` over the rating strata of its own class
    /// (`None` where no model has that rating).
    pub own_class_profile: Vec<Vec<Option<Rational>>>,
}

/// Enumerates every `k`-subset of `0..n` for a two-class `labels` (values 1/2).
pub fn brute_force_oracle(n: usize, k: usize, labels: &[usize]) -> Result<OracleResult> {
    if n > ORACLE_MAX_N {
        return Err(SdError::EnumerationTooLarge { n, k, max: ORACLE_MAX_N });
    }
    if labels.len() != n || labels.iter().any(|&c| c != 1 && c != 2) {
        return Err(SdError::InvalidDataset("oracle needs one label in {1, 2} per point".into()));
    }
    let class_mask =
        |c: usize| -> u32 { labels.iter().enumerate().filter(|(_, &l)| l == c).fold(0, |m, (i, _)| m | (1 << i)) };
    let (tr1, tr2) = (class_mask(1), class_mask(2));
    let (s1, s2) = (tr1.count_ones() as i128, tr2.count_ones() as i128);
    if s1 == 0 || s2 == 0 {
        return Err(SdError::InvalidDataset("both classes need points".into()));
    }

    let zero = Rational::from_integer(0);
    let mut t = 0usize;
    let mut enriched = 0usize;
    let mut covered = vec![0usize; n];
    let mut x_sum = vec![zero; n];
    // [point][captured count of own class] -> (group size, covering)
    let mut strata: Vec<Vec<(usize, usize)>> =
        labels.iter().map(|&c| vec![(0, 0); if c == 1 { s1 as usize } else { s2 as usize } + 1]).collect();

    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        t += 1;
        let c1 = (mask & tr1).count_ones() as i128;
        let c2 = (mask & tr2).count_ones() as i128;
        let r1 = ratio(c1, s1);
        let r2 = ratio(c2, s2);
        let is_enriched = r1 != r2;
        enriched += usize::from(is_enriched);
        for q in 0..n {
            let inside = mask & (1 << q) != 0;
            if inside {
                covered[q] += 1;
            }
            if is_enriched {
                let c = Rational::from_integer(i128::from(inside));
                x_sum[q] += (c - r2) / (r1 - r2);
            }
            let own = if labels[q] == 1 { c1 } else { c2 } as usize;
            strata[q][own].0 += 1;
            strata[q][own].1 += usize::from(inside);
        }
    }

    let tt = t as i128;
    Ok(OracleResult {
        n,
        k,
        t,
        enriched,
        coverage: covered.iter().map(|&c| ratio(c as i128, tt)).collect(),
        y12: x_sum.iter().map(|s| s / tt).collect(),
        own_class_profile: strata
            .iter()
            .map(|row| row.iter().map(|&(g, c)| (g > 0).then(|| ratio(c as i128, g as i128))).collect())
            .collect(),
    })
}
