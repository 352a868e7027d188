//! Feature-space points, labeled datasets and weak-model regions.
//!
//! A weak model is either an explicit subset of a finite reference set
//! (points are matched by id) or a geometric region built as a union of
//! intersections of simple primitives. All regions are closed: a point on a
//! boundary is inside.

mod dataset;
mod region;
mod subsets;

pub use dataset::{write_points_csv, BoundingBox, LabeledDataset, PointTable};
pub use region::{Region, RegionPrimitive, Side, WeakModel};
pub use subsets::{binomial, enumerate_k_subsets, interval_encoding, KSubsets, MAX_ENUMERATION_N};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SdError};

/// A point in feature space, optionally carrying its index in a reference set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<usize>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(SdError::InvalidDataset("point has no coordinates".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(SdError::InvalidDataset(format!("non-finite coordinate {bad}")));
        }
        Ok(Point { coords, id: None })
    }

    pub fn with_id(coords: Vec<f64>, id: usize) -> Result<Self> {
        let mut p = Point::new(coords)?;
        p.id = Some(id);
        Ok(p)
    }

    /// Convenience for one-dimensional fixtures.
    pub fn scalar(v: f64, id: Option<usize>) -> Result<Self> {
        let mut p = Point::new(vec![v])?;
        p.id = id;
        Ok(p)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn id(&self) -> Option<usize> {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub(crate) fn set_id(&mut self, id: usize) {
        self.id = Some(id);
    }
}

/// `C_m(q)`: 1 iff `q` lies in `m`.
pub fn membership(m: &WeakModel, q: &Point) -> Result<bool> {
    m.contains(q)
}
