use std::fmt;

use serde::{Deserialize, Serialize};

use super::{RatedModel, TrainingInfo};
use crate::error::{Result, SdError};
use crate::geometry::Point;
use crate::ratings::{x_value, x_value_exact, Pair};
use crate::rational::{ratio, to_f64, Rational};

/// Whether the exact rational discriminants are tracked next to the floats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Float,
    /// Desk-scale only: rationals grow with the ensemble.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Class(usize),
    Undecided,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Class(c) => write!(f, "{c}"),
            Decision::Undecided => f.write_str("undecided"),
        }
    }
}

/// How a point is assigned a class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecisionRule {
    /// `Y_ij > theta` gives `i`, `< theta` gives `j`.
    Threshold { pair: Pair, theta: f64 },
    /// Every pair with models casts a threshold vote; plurality wins.
    PairwiseVote { theta: f64 },
    /// Largest `W_i`.
    ArgmaxW,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UndecidedPolicy {
    #[default]
    Undecided,
    /// Fall back to the class with the most training points.
    Prior,
}

#[derive(Debug, Clone)]
struct PairTrack {
    pair: Pair,
    t: usize,
    enriched: usize,
    y: Vec<f64>,
    y_exact: Option<Vec<Rational>>,
}

/// Running discriminants over a fixed list of tracked points.
///
/// Pushes are sequential; `Y` is kept as the running mean
/// `Y <- ((t - 1) Y + X) / t` for each class pair separately.
#[derive(Debug, Clone)]
pub struct DiscriminantState {
    points: Vec<Point>,
    n_classes: usize,
    class_sizes: Vec<usize>,
    t: usize,
    coverage: Vec<usize>,
    tracks: Vec<PairTrack>,
    // [point * n_classes + class - 1]
    w_sum: Vec<f64>,
    w_sum_exact: Option<Vec<Rational>>,
    w_count: Vec<usize>,
}

impl DiscriminantState {
    pub fn new(points: Vec<Point>, training: &TrainingInfo, precision: Precision) -> Self {
        let n = points.len();
        let exact = precision == Precision::Exact;
        let zero = Rational::from_integer(0);
        let tracks = Pair::all(training.n_classes)
            .into_iter()
            .map(|pair| PairTrack { pair, t: 0, enriched: 0, y: vec![0.0; n], y_exact: exact.then(|| vec![zero; n]) })
            .collect();
        DiscriminantState {
            n_classes: training.n_classes,
            class_sizes: training.class_sizes.clone(),
            t: 0,
            coverage: vec![0; n],
            tracks,
            w_sum: vec![0.0; n * training.n_classes],
            w_sum_exact: exact.then(|| vec![zero; n * training.n_classes]),
            w_count: vec![0; n],
            points,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Size of `M_t`.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Number of models pushed for `pair` (either orientation).
    pub fn t_pair(&self, pair: Pair) -> usize {
        self.track(pair).map_or(0, |tr| tr.t)
    }

    pub fn push(&mut self, entry: &RatedModel) -> Result<()> {
        let canon = entry.pair.canonical();
        let track_idx = self
            .tracks
            .iter()
            .position(|tr| tr.pair == canon)
            .ok_or(SdError::ClassOutOfRange { class: canon.j, n_classes: self.n_classes })?;
        let inside: Vec<bool> = self.points.iter().map(|q| entry.model.contains(q)).collect::<Result<_>>()?;

        self.t += 1;
        let rating = &entry.rating;
        let enriched = rating.is_enriched(canon);
        let x_in = x_value(rating, true, canon);
        let x_out = x_value(rating, false, canon);
        let exact_x = self.tracks[track_idx]
            .y_exact
            .is_some()
            .then(|| (x_value_exact(rating, true, canon), x_value_exact(rating, false, canon)));

        let track = &mut self.tracks[track_idx];
        track.t += 1;
        track.enriched += usize::from(enriched);
        let t = track.t as f64;
        for (q, &inm) in inside.iter().enumerate() {
            let x = if inm { x_in } else { x_out };
            track.y[q] = (track.y[q] * (t - 1.0) + x) / t;
        }
        if let (Some(ys), Some((xi, xo))) = (track.y_exact.as_mut(), exact_x) {
            let t = track.t as i128;
            for (q, &inm) in inside.iter().enumerate() {
                let x = if inm { xi } else { xo };
                ys[q] = (ys[q] * (t - 1) + x) / t;
            }
        }

        let posteriors: Option<Vec<Rational>> = (1..=self.n_classes).map(|c| rating.posterior_exact(c)).collect();
        for (q, &inm) in inside.iter().enumerate() {
            if !inm {
                continue;
            }
            self.coverage[q] += 1;
            if let Some(post) = &posteriors {
                self.w_count[q] += 1;
                for (c, p) in post.iter().enumerate() {
                    self.w_sum[q * self.n_classes + c] += to_f64(p);
                    if let Some(we) = self.w_sum_exact.as_mut() {
                        we[q * self.n_classes + c] += p;
                    }
                }
            }
        }
        Ok(())
    }

    fn track(&self, pair: Pair) -> Option<&PairTrack> {
        let canon = pair.canonical();
        self.tracks.iter().find(|tr| tr.pair == canon)
    }

    /// `N(q, M_t)`
    pub fn coverage_count(&self, q: usize) -> usize {
        self.coverage[q]
    }

    /// `N(q, M_t) / t`
    pub fn coverage_ratio(&self, q: usize) -> Result<f64> {
        if self.t == 0 {
            return Err(SdError::EmptyEnsemble);
        }
        Ok(self.coverage[q] as f64 / self.t as f64)
    }

    pub fn coverage_ratio_exact(&self, q: usize) -> Result<Rational> {
        if self.t == 0 {
            return Err(SdError::EmptyEnsemble);
        }
        Ok(ratio(self.coverage[q] as i128, self.t as i128))
    }

    /// `Y_ij(q, M_t)` over the models of `pair`.
    pub fn y(&self, q: usize, pair: Pair) -> Result<f64> {
        let tr = self.track(pair).filter(|tr| tr.t > 0).ok_or(SdError::EmptyEnsemble)?;
        if pair.i < pair.j {
            Ok(tr.y[q])
        } else {
            // X_ji = 1 - X_ij on enriched models, 0 = 0 otherwise
            Ok(tr.enriched as f64 / tr.t as f64 - tr.y[q])
        }
    }

    /// Exact `Y_ij`, when the state tracks rationals.
    pub fn y_exact(&self, q: usize, pair: Pair) -> Result<Option<Rational>> {
        let tr = self.track(pair).filter(|tr| tr.t > 0).ok_or(SdError::EmptyEnsemble)?;
        Ok(tr.y_exact.as_ref().map(|ys| {
            if pair.i < pair.j {
                ys[q]
            } else {
                ratio(tr.enriched as i128, tr.t as i128) - ys[q]
            }
        }))
    }

    /// Number of covering models that capture some training point.
    pub fn covering_count(&self, q: usize) -> usize {
        self.w_count[q]
    }

    /// `W_i(q)`: mean posterior rating of class `i` over the models covering `q`.
    pub fn w(&self, q: usize, class: usize) -> Result<f64> {
        self.check_class(class)?;
        match self.w_count[q] {
            0 => Err(SdError::UncoveredPoint(q)),
            n => Ok(self.w_sum[q * self.n_classes + class - 1] / n as f64),
        }
    }

    pub fn w_exact(&self, q: usize, class: usize) -> Result<Option<Rational>> {
        self.check_class(class)?;
        if self.w_count[q] == 0 {
            return Err(SdError::UncoveredPoint(q));
        }
        Ok(self.w_sum_exact.as_ref().map(|we| we[q * self.n_classes + class - 1] / self.w_count[q] as i128))
    }

    fn check_class(&self, class: usize) -> Result<()> {
        if class == 0 || class > self.n_classes {
            Err(SdError::ClassOutOfRange { class, n_classes: self.n_classes })
        } else {
            Ok(())
        }
    }

    /// Threshold decision on `Y_ij`; exact equality is undecided. Uses the
    /// exact discriminant when it is tracked.
    pub fn classify(&self, q: usize, pair: Pair, theta: f64) -> Decision {
        let y = match self.y_exact(q, pair) {
            Ok(Some(y)) => to_f64(&y),
            Ok(None) => match self.y(q, pair) {
                Ok(y) => y,
                Err(_) => return Decision::Undecided,
            },
            Err(_) => return Decision::Undecided,
        };
        if y > theta {
            Decision::Class(pair.i)
        } else if y < theta {
            Decision::Class(pair.j)
        } else {
            Decision::Undecided
        }
    }

    pub fn decide(&self, q: usize, rule: DecisionRule, policy: UndecidedPolicy) -> Decision {
        let d = match rule {
            DecisionRule::Threshold { pair, theta } => self.classify(q, pair, theta),
            DecisionRule::PairwiseVote { theta } => {
                let mut votes = vec![0usize; self.n_classes];
                for tr in self.tracks.iter().filter(|tr| tr.t > 0) {
                    if let Decision::Class(c) = self.classify(q, tr.pair, theta) {
                        votes[c - 1] += 1;
                    }
                }
                unique_argmax(votes.iter().map(|&v| v as f64))
            }
            DecisionRule::ArgmaxW => {
                if self.w_count[q] == 0 {
                    Decision::Undecided
                } else {
                    let n = self.w_count[q] as f64;
                    unique_argmax((0..self.n_classes).map(|c| self.w_sum[q * self.n_classes + c] / n))
                }
            }
        };
        match (d, policy) {
            (Decision::Undecided, UndecidedPolicy::Prior) => unique_argmax(self.class_sizes.iter().map(|&s| s as f64)),
            _ => d,
        }
    }
}

/// 1-based index of the strict maximum; ties and all-zero votes are undecided.
fn unique_argmax(values: impl Iterator<Item = f64>) -> Decision {
    let mut best: Option<(usize, f64)> = None;
    let mut tied = false;
    for (i, v) in values.enumerate() {
        match best {
            None => best = Some((i, v)),
            Some((_, b)) if v > b => {
                best = Some((i, v));
                tied = false;
            }
            Some((_, b)) if v == b => tied = true,
            _ => {}
        }
    }
    match best {
        Some((i, v)) if !tied && v > 0.0 => Decision::Class(i + 1),
        _ => Decision::Undecided,
    }
}
