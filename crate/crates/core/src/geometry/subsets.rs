use super::region::{RegionPrimitive, Side, WeakModel};
use crate::error::{Result, SdError};

/// Largest reference set the full enumeration accepts (C(24,12) ~ 2.7M).
pub const MAX_ENUMERATION_N: usize = 24;

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

/// Sorted `k`-element subsets of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct KSubsets {
    n: usize,
    current: Option<Vec<usize>>,
}

impl KSubsets {
    pub fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        KSubsets { n, current }
    }
}

impl Iterator for KSubsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let k = out.len();
        let mut next = out.clone();
        // rightmost position that can still advance
        let mut i = k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                return Some(out);
            }
        }
        Some(out)
    }
}

/// All `C(n, k)` explicit-subset models over a reference set of `n` points,
/// lexicographic, with model ids `1..=C(n,k)`.
pub fn enumerate_k_subsets(n: usize, k: usize) -> Result<Vec<WeakModel>> {
    if n > MAX_ENUMERATION_N {
        return Err(SdError::EnumerationTooLarge { n, k, max: MAX_ENUMERATION_N });
    }
    KSubsets::new(n, k).enumerate().map(|(i, ids)| WeakModel::subset(i as u64 + 1, n, ids)).collect()
}

/// Encodes an explicit subset of collinear reference points as a 1-D
/// geometric model: each run of consecutive members becomes the interval
/// between the midpoints to its outside neighbours, unbounded at the ends.
///
/// `positions[i]` is the feature value of reference point `i` and must be
/// strictly increasing.
pub fn interval_encoding(model_id: u64, ids: &[usize], positions: &[f64]) -> Result<WeakModel> {
    if !positions.windows(2).all(|w| w[0] < w[1]) {
        return Err(SdError::InvalidModel("reference positions must be strictly increasing".into()));
    }
    let n = positions.len();
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ids.len() || sorted.last().is_some_and(|&i| i >= n) {
        return Err(SdError::InvalidModel("subset ids must be distinct and in range".into()));
    }
    let mid = |a: usize| (positions[a] + positions[a + 1]) / 2.0;

    if sorted.is_empty() {
        // two disjoint closed half-lines have an empty intersection
        let c = positions.first().copied().unwrap_or(0.0);
        return WeakModel::geometric(
            model_id,
            1,
            vec![vec![
                RegionPrimitive::HalfSpace { axis: 0, threshold: c - 1.0, side: Side::Below },
                RegionPrimitive::HalfSpace { axis: 0, threshold: c, side: Side::Above },
            ]],
        );
    }
    if sorted.len() == n {
        let c = positions[0];
        return WeakModel::geometric(
            model_id,
            1,
            vec![
                vec![RegionPrimitive::HalfSpace { axis: 0, threshold: c, side: Side::Below }],
                vec![RegionPrimitive::HalfSpace { axis: 0, threshold: c, side: Side::Above }],
            ],
        );
    }

    let mut terms = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start;
        while end + 1 < sorted.len() && sorted[end + 1] == sorted[end] + 1 {
            end += 1;
        }
        let (lo, hi) = (sorted[start], sorted[end]);
        let prim = match (lo == 0, hi == n - 1) {
            (true, false) => RegionPrimitive::HalfSpace { axis: 0, threshold: mid(hi), side: Side::Below },
            (false, true) => RegionPrimitive::HalfSpace { axis: 0, threshold: mid(lo - 1), side: Side::Above },
            (false, false) => RegionPrimitive::Slab { axis: 0, low: mid(lo - 1), high: mid(hi) },
            (true, true) => unreachable!("full set handled above"),
        };
        terms.push(vec![prim]);
        start = end + 1;
    }
    WeakModel::geometric(model_id, 1, terms)
}
