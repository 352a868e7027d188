//! The 252-model worked example: ten collinear points, all 5-point models
//! taken in a fixed pseudo-random order, and the traces of coverage and of
//! the two-class discriminant as the collection grows.
//!
//! The model order is shipped as data (`data/table1.txt`); the printed
//! traces are shipped as `data/table2_published.csv` and
//! `data/table3_published.csv` and every recomputed cell is compared with
//! them.

mod oracle;
mod tables;

pub use oracle::{brute_force_oracle, OracleResult, ORACLE_MAX_N};
pub use tables::{
    compare_table2, compare_table3, emit_profiles, emit_table2, emit_table3, figure1_series, figure2_series,
    profiles_csv, published_table2, published_table3, table2_csv, table3_csv, CellMismatch, ProfileRow, Table2Row,
    Table3Row,
};

use serde::Serialize;

use crate::ensemble::{Decision, Ensemble, Precision};
use crate::error::{Result, SdError};
use crate::geometry::{interval_encoding, LabeledDataset, Point, WeakModel};
use crate::ratings::Pair;

pub const N_POINTS: usize = 10;
pub const MODEL_SIZE: usize = 5;
pub const N_MODELS: usize = 252;
/// Class of `q_0 .. q_9`: x x x o o o o x x o.
pub const LABELS: [usize; N_POINTS] = [1, 1, 1, 2, 2, 2, 2, 1, 1, 2];
/// Offset of each test point `p_i` from its training neighbour `q_i`.
pub const TEST_OFFSET: f64 = 0.25;
pub const PAIR: Pair = Pair { i: 1, j: 2 };

const TABLE1: &str = include_str!("data/table1.txt");

/// Parses a model listing, one model per line as a run of digits (`35689`).
pub fn parse_permutation(text: &str) -> Result<Vec<WeakModel>> {
    let mut models = Vec::with_capacity(N_MODELS);
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate() {
        let ids: Vec<usize> = line
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as usize))
            .collect::<Option<_>>()
            .ok_or_else(|| SdError::Integrity(format!("entry {}: not a digit string: '{line}'", i + 1)))?;
        if ids.len() != MODEL_SIZE {
            return Err(SdError::Integrity(format!("entry {}: {} elements, expected {MODEL_SIZE}", i + 1, ids.len())));
        }
        let m = WeakModel::subset(i as u64 + 1, N_POINTS, ids)
            .map_err(|e| SdError::Integrity(format!("entry {}: {e}", i + 1)))?;
        if !seen.insert(m.subset_ids().map(<[usize]>::to_vec)) {
            return Err(SdError::Integrity(format!("entry {}: duplicate model {line}", i + 1)));
        }
        models.push(m);
    }
    if models.len() != N_MODELS {
        return Err(SdError::Integrity(format!("{} entries, expected {N_MODELS}", models.len())));
    }
    Ok(models)
}

/// The shipped model order `m_1 .. m_252` as explicit subsets.
pub fn load_permutation() -> Result<Vec<WeakModel>> {
    parse_permutation(TABLE1)
}

/// Feature value of `q_i`.
pub fn position(i: usize) -> f64 {
    i as f64
}

/// `A` with its two-class labeling; `q_i` has id `i` and value `i`.
pub fn training_set() -> LabeledDataset {
    let pts = (0..N_POINTS).map(|i| Point::with_id(vec![position(i)], i).expect("finite")).collect();
    LabeledDataset::new("A", pts, LABELS.to_vec(), 2).expect("valid fixture")
}

/// `p_0 .. p_9`, each just right of its `q_i`, without ids.
pub fn test_points() -> Vec<Point> {
    (0..N_POINTS).map(|i| Point::new(vec![position(i) + TEST_OFFSET]).expect("finite")).collect()
}

/// The permutation re-expressed as unions of intervals on the feature line.
pub fn geometric_permutation() -> Result<Vec<WeakModel>> {
    let positions: Vec<f64> = (0..N_POINTS).map(position).collect();
    load_permutation()?.iter().map(|m| interval_encoding(m.id(), m.subset_ids().expect("subset"), &positions)).collect()
}

/// All 252 models rated on `A` and pushed in order.
pub fn fixture_ensemble(geometric: bool) -> Result<Ensemble> {
    let ds = training_set();
    let models = if geometric { geometric_permutation()? } else { load_permutation()? };
    let mut ens = Ensemble::for_dataset(&ds);
    for m in models {
        ens.push_rated(m, &ds, PAIR)?;
    }
    Ok(ens)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectabilityReport {
    /// `(model id, i)` where `p_i` and `q_i` fall on different sides of the model.
    pub membership_mismatches: Vec<(u64, usize)>,
    pub train_decisions: Vec<Decision>,
    pub test_decisions: Vec<Decision>,
}

impl ProjectabilityReport {
    pub fn is_clean(&self) -> bool {
        self.membership_mismatches.is_empty()
            && self.train_decisions == self.test_decisions
            && self.train_decisions.iter().zip(LABELS).all(|(d, c)| *d == Decision::Class(c))
    }
}

/// Evaluates the interval-encoded ensemble on `TE` and compares every
/// membership and the final decisions with those of `TR`.
pub fn projectability_check() -> Result<ProjectabilityReport> {
    let ens = fixture_ensemble(true)?;
    let train = training_set();
    let test = test_points();
    let mut membership_mismatches = Vec::new();
    for e in ens.models() {
        for (i, (q, p)) in train.points().iter().zip(&test).enumerate() {
            if e.model.contains(q)? != e.model.contains(p)? {
                membership_mismatches.push((e.model.id(), i));
            }
        }
    }
    let tr_state = ens.evaluate(train.points(), Precision::Exact)?;
    let te_state = ens.evaluate(&test, Precision::Exact)?;
    Ok(ProjectabilityReport {
        membership_mismatches,
        train_decisions: (0..N_POINTS).map(|i| tr_state.classify(i, PAIR, 0.5)).collect(),
        test_decisions: (0..N_POINTS).map(|i| te_state.classify(i, PAIR, 0.5)).collect(),
    })
}
