use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{Result, SdError};

/// Which side of an axis threshold a half-space keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `x[axis] <= threshold`
    Below,
    /// `x[axis] >= threshold`
    Above,
}

/// One of the six primitive region shapes. All are closed sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegionPrimitive {
    HalfSpace {
        axis: usize,
        threshold: f64,
        side: Side,
    },
    /// Points at least as close (Euclidean) to `anchor` as to `other`.
    Bisector {
        anchor: Vec<f64>,
        other: Vec<f64>,
    },
    Slab {
        axis: usize,
        low: f64,
        high: f64,
    },
    Hypercube {
        center: Vec<f64>,
        half_edges: Vec<f64>,
    },
    L1Ball {
        center: Vec<f64>,
        radius: f64,
    },
    L2Ball {
        center: Vec<f64>,
        radius: f64,
    },
}

impl RegionPrimitive {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(SdError::InvalidRegion(msg));
        let check_axis = |axis: usize| {
            if axis >= dim {
                Err(SdError::InvalidRegion(format!("axis {axis} out of range for dimension {dim}")))
            } else {
                Ok(())
            }
        };
        let check_vec = |name: &str, v: &[f64]| {
            if v.len() != dim {
                Err(SdError::DimensionMismatch { expected: dim, actual: v.len() })
            } else if v.iter().any(|x| !x.is_finite()) {
                Err(SdError::InvalidRegion(format!("{name} has a non-finite coordinate")))
            } else {
                Ok(())
            }
        };
        match self {
            RegionPrimitive::HalfSpace { axis, threshold, .. } => {
                check_axis(*axis)?;
                if !threshold.is_finite() {
                    return bad("half-space threshold must be finite".into());
                }
            }
            RegionPrimitive::Bisector { anchor, other } => {
                check_vec("anchor", anchor)?;
                check_vec("other anchor", other)?;
                if anchor == other {
                    return bad("bisector anchors must be distinct".into());
                }
            }
            RegionPrimitive::Slab { axis, low, high } => {
                check_axis(*axis)?;
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return bad(format!("slab needs finite low < high, got [{low}, {high}]"));
                }
            }
            RegionPrimitive::Hypercube { center, half_edges } => {
                check_vec("center", center)?;
                check_vec("half edges", half_edges)?;
                if half_edges.iter().any(|h| *h <= 0.0) {
                    return bad("hypercube half edges must be positive".into());
                }
            }
            RegionPrimitive::L1Ball { center, radius } | RegionPrimitive::L2Ball { center, radius } => {
                check_vec("center", center)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("ball radius must be positive, got {radius}"));
                }
            }
        }
        Ok(())
    }

    /// Membership for a coordinate vector of already-checked dimension.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            RegionPrimitive::HalfSpace { axis, threshold, side } => match side {
                Side::Below => x[*axis] <= *threshold,
                Side::Above => x[*axis] >= *threshold,
            },
            RegionPrimitive::Bisector { anchor, other } => sq_dist(x, anchor) <= sq_dist(x, other),
            RegionPrimitive::Slab { axis, low, high } => *low <= x[*axis] && x[*axis] <= *high,
            RegionPrimitive::Hypercube { center, half_edges } => {
                x.iter().zip(center).zip(half_edges).all(|((xi, ci), hi)| (xi - ci).abs() <= *hi)
            }
            RegionPrimitive::L1Ball { center, radius } => {
                x.iter().zip(center).map(|(a, b)| (a - b).abs()).sum::<f64>() <= *radius
            }
            RegionPrimitive::L2Ball { center, radius } => sq_dist(x, center) <= radius * radius,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The point set a weak model describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Explicit member ids over a reference set of `universe` points.
    Subset { universe: usize, ids: Vec<usize> },
    /// Union over `terms`; each term is the intersection of its primitives.
    Geometric { dim: usize, terms: Vec<Vec<RegionPrimitive>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakModel {
    id: u64,
    region: Region,
}

impl WeakModel {
    /// Explicit-subset model; `ids` may come in any order but must be distinct.
    pub fn subset(id: u64, universe: usize, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_unstable();
        let m = WeakModel { id, region: Region::Subset { universe, ids } };
        m.validate()?;
        Ok(m)
    }

    /// Union of intersections of primitives in a `dim`-dimensional space.
    pub fn geometric(id: u64, dim: usize, terms: Vec<Vec<RegionPrimitive>>) -> Result<Self> {
        let m = WeakModel { id, region: Region::Geometric { dim, terms } };
        m.validate()?;
        Ok(m)
    }

    /// A single primitive.
    pub fn primitive(id: u64, dim: usize, p: RegionPrimitive) -> Result<Self> {
        WeakModel::geometric(id, dim, vec![vec![p]])
    }

    pub fn from_region(id: u64, region: Region) -> Result<Self> {
        let m = WeakModel { id, region };
        m.validate()?;
        Ok(m)
    }

    /// Re-checks all construction invariants; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        match &self.region {
            Region::Subset { universe, ids } => {
                if !ids.windows(2).all(|w| w[0] < w[1]) {
                    return Err(SdError::InvalidModel(format!(
                        "model {}: subset ids must be sorted and distinct",
                        self.id
                    )));
                }
                if let Some(&last) = ids.last() {
                    if last >= *universe {
                        return Err(SdError::InvalidModel(format!(
                            "model {}: id {last} outside reference set of {universe}",
                            self.id
                        )));
                    }
                }
            }
            Region::Geometric { dim, terms } => {
                if *dim == 0 {
                    return Err(SdError::InvalidModel("dimension must be at least 1".into()));
                }
                if terms.is_empty() || terms.iter().any(|t| t.is_empty()) {
                    return Err(SdError::InvalidModel(format!(
                        "model {}: every union term needs at least one primitive",
                        self.id
                    )));
                }
                for p in terms.iter().flatten() {
                    p.validate(*dim)?;
                }
            }
        }
        Ok(())
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.id = id;
        self
    }

    /// Member ids for explicit-subset models.
    pub fn subset_ids(&self) -> Option<&[usize]> {
        match &self.region {
            Region::Subset { ids, .. } => Some(ids),
            Region::Geometric { .. } => None,
        }
    }

    pub fn is_geometric(&self) -> bool {
        matches!(self.region, Region::Geometric { .. })
    }

    pub fn contains(&self, q: &Point) -> Result<bool> {
        match &self.region {
            Region::Subset { universe, ids } => {
                let id = q.id().ok_or(SdError::MissingPointId)?;
                if id >= *universe {
                    return Err(SdError::InvalidModel(format!("point id {id} outside reference set of {universe}")));
                }
                Ok(ids.binary_search(&id).is_ok())
            }
            Region::Geometric { dim, terms } => {
                if q.dim() != *dim {
                    return Err(SdError::DimensionMismatch { expected: *dim, actual: q.dim() });
                }
                let x = q.coords();
                Ok(terms.iter().any(|term| term.iter().all(|p| p.contains(x))))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(i: usize) -> Point {
        Point::scalar(i as f64, Some(i)).unwrap()
    }

    #[test]
    fn subset_membership_follows_ids() {
        let m1 = WeakModel::subset(1, 10, [3, 5, 6, 8, 9]).unwrap();
        assert!(m1.contains(&q(8)).unwrap());
        assert!(!m1.contains(&q(0)).unwrap());
        let hits = (0..10).filter(|&i| m1.contains(&q(i)).unwrap()).count();
        assert_eq!(hits, 5);
    }

    #[test]
    fn subset_rejects_duplicates_and_out_of_range() {
        assert!(WeakModel::subset(1, 10, [1, 1, 2]).is_err());
        assert!(WeakModel::subset(1, 10, [1, 10]).is_err());
    }

    #[test]
    fn subset_needs_point_ids() {
        let m = WeakModel::subset(1, 10, [0, 1]).unwrap();
        let p = Point::new(vec![0.0]).unwrap();
        assert!(matches!(m.contains(&p), Err(SdError::MissingPointId)));
    }

    #[test]
    fn empty_intersection_covers_nothing() {
        let m = WeakModel::geometric(
            1,
            1,
            vec![vec![
                RegionPrimitive::HalfSpace { axis: 0, threshold: 0.0, side: Side::Below },
                RegionPrimitive::HalfSpace { axis: 0, threshold: 1.0, side: Side::Above },
            ]],
        )
        .unwrap();
        for v in [-5.0, 0.0, 0.5, 1.0, 7.0] {
            assert!(!m.contains(&Point::scalar(v, None).unwrap()).unwrap());
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = WeakModel::primitive(1, 2, RegionPrimitive::L2Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap();
        let p = Point::new(vec![0.0]).unwrap();
        assert!(matches!(m.contains(&p), Err(SdError::DimensionMismatch { expected: 2, actual: 1 })));
    }

    #[test]
    fn boundaries_are_closed() {
        let on = |prim: RegionPrimitive, x: Vec<f64>| {
            let dim = x.len();
            WeakModel::primitive(1, dim, prim).unwrap().contains(&Point::new(x).unwrap()).unwrap()
        };
        assert!(on(RegionPrimitive::HalfSpace { axis: 0, threshold: 1.0, side: Side::Below }, vec![1.0]));
        assert!(on(RegionPrimitive::Slab { axis: 1, low: 0.0, high: 2.0 }, vec![9.0, 2.0]));
        assert!(on(RegionPrimitive::Hypercube { center: vec![0.0, 0.0], half_edges: vec![1.0, 0.5] }, vec![1.0, -0.5]));
        assert!(on(RegionPrimitive::L1Ball { center: vec![0.0, 0.0], radius: 1.0 }, vec![0.5, 0.5]));
        assert!(on(RegionPrimitive::L2Ball { center: vec![0.0, 0.0], radius: 5.0 }, vec![3.0, 4.0]));
        // equidistant point belongs to the anchor side
        assert!(on(RegionPrimitive::Bisector { anchor: vec![0.0, 0.0], other: vec![2.0, 0.0] }, vec![1.0, 7.0]));
    }

    #[test]
    fn l1_and_l2_balls_differ_off_axis() {
        let x = Point::new(vec![0.6, 0.6]).unwrap();
        let l1 = WeakModel::primitive(1, 2, RegionPrimitive::L1Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap();
        let l2 = WeakModel::primitive(1, 2, RegionPrimitive::L2Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap();
        assert!(!l1.contains(&x).unwrap());
        assert!(l2.contains(&x).unwrap());
    }

    #[test]
    fn bisector_keeps_anchor_side() {
        let m = WeakModel::primitive(1, 2, RegionPrimitive::Bisector { anchor: vec![0.0, 0.0], other: vec![4.0, 4.0] })
            .unwrap();
        assert!(m.contains(&Point::new(vec![0.0, 1.0]).unwrap()).unwrap());
        assert!(!m.contains(&Point::new(vec![4.0, 3.0]).unwrap()).unwrap());
    }

    #[test]
    fn invalid_primitives_are_rejected() {
        let bad = [
            RegionPrimitive::Slab { axis: 0, low: 1.0, high: 1.0 },
            RegionPrimitive::L2Ball { center: vec![0.0], radius: 0.0 },
            RegionPrimitive::L1Ball { center: vec![0.0], radius: -1.0 },
            RegionPrimitive::Hypercube { center: vec![0.0], half_edges: vec![0.0] },
            RegionPrimitive::Bisector { anchor: vec![1.0], other: vec![1.0] },
            RegionPrimitive::HalfSpace { axis: 3, threshold: 0.0, side: Side::Above },
            RegionPrimitive::HalfSpace { axis: 0, threshold: f64::INFINITY, side: Side::Above },
        ];
        for p in bad {
            assert!(WeakModel::primitive(1, 1, p.clone()).is_err(), "{p:?}");
        }
        assert!(WeakModel::geometric(1, 1, vec![]).is_err());
        assert!(WeakModel::geometric(1, 1, vec![vec![]]).is_err());
    }

    #[test]
    fn serde_round_trip_keeps_region() {
        let m = WeakModel::geometric(
            7,
            2,
            vec![
                vec![RegionPrimitive::L2Ball { center: vec![0.5, 0.25], radius: 0.125 }],
                vec![
                    RegionPrimitive::Slab { axis: 1, low: -1.0, high: 1.0 },
                    RegionPrimitive::HalfSpace { axis: 0, threshold: 0.1, side: Side::Above },
                ],
            ],
        )
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: WeakModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
