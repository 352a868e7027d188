//! Stochastic training: draw candidate regions, keep the enriched ones,
//! and steer coverage toward points the ensemble has neglected.

mod config;
mod generator;
mod rng;

use std::cmp::Ordering;

use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

pub use config::TrainConfig;
pub use generator::{
    generate_candidate, CandidateSource, ExhaustiveSource, GeneratorConfig, ModelKind, RegionGenerator, SubsetGenerator,
};
pub use rng::SplitMix64;

use crate::ensemble::Ensemble;
use crate::error::{Result, SdError};
use crate::geometry::{LabeledDataset, WeakModel};
use crate::ratings::{rate, ModelRating, Pair};
use crate::rational::Rational;

/// How a candidate's enrichment decides acceptance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnrichmentMode {
    /// Accept the first candidate with `|d_ij| >= theta`.
    Threshold(f64),
    /// Draw the full trial budget and keep the largest `|d_ij|`.
    BestOf,
}

/// Which class pair each acceptance round targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairTarget {
    Fixed(Pair),
    /// Cycle through all pairs `(i, j)`, `i < j`, one per accepted model.
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnrichmentPolicy {
    pub mode: EnrichmentMode,
    pub target: PairTarget,
}

impl EnrichmentPolicy {
    pub fn threshold(theta: f64) -> Self {
        EnrichmentPolicy { mode: EnrichmentMode::Threshold(theta), target: PairTarget::RoundRobin }
    }

    pub fn best_of() -> Self {
        EnrichmentPolicy { mode: EnrichmentMode::BestOf, target: PairTarget::RoundRobin }
    }

    pub fn with_pair(mut self, pair: Pair) -> Self {
        self.target = PairTarget::Fixed(pair);
        self
    }

    pub fn validate(&self, n_classes: usize) -> Result<()> {
        if let EnrichmentMode::Threshold(theta) = self.mode {
            if !(theta > 0.0 && theta <= 1.0) {
                return Err(SdError::InvalidConfig(format!("enrichment threshold {theta} not in (0, 1]")));
            }
        }
        if let PairTarget::Fixed(p) = self.target {
            if p.i > n_classes || p.j > n_classes {
                return Err(SdError::ClassOutOfRange { class: p.i.max(p.j), n_classes });
            }
        }
        Ok(())
    }

    /// Pairs visited in order, one per acceptance round.
    pub fn pairs(&self, n_classes: usize) -> Vec<Pair> {
        match self.target {
            PairTarget::Fixed(p) => vec![p],
            PairTarget::RoundRobin => Pair::all(n_classes),
        }
    }

    pub fn accepts(&self, d: &Rational) -> bool {
        if *d == Rational::from_integer(0) {
            return false;
        }
        match self.mode {
            EnrichmentMode::Threshold(theta) => crate::rational::to_f64(&d.abs()) >= theta,
            EnrichmentMode::BestOf => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum UniformityMode {
    #[default]
    Off,
    /// Reject candidates whose merit is below the threshold.
    MeritThreshold(f64),
    /// Keep the highest-merit candidate among the trial budget.
    MeritBestOf,
    /// Center drawn shapes on current weak points.
    Biased,
}

impl UniformityMode {
    pub fn validate(&self) -> Result<()> {
        if let UniformityMode::MeritThreshold(theta) = *self {
            if !(0.0..=1.0).contains(&theta) {
                return Err(SdError::InvalidConfig(format!("merit threshold {theta} not in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Per-point counts of accepted models that cover a training point and are
/// positively enriched for that point's class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageCounters {
    counts: Vec<usize>,
}

impl CoverageCounters {
    pub fn new(n_points: usize) -> Self {
        CoverageCounters { counts: vec![0; n_points] }
    }

    pub fn from_counts(counts: Vec<usize>) -> Self {
        CoverageCounters { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Credits every covered point of `class`.
    pub fn record(&mut self, covered: &[bool], class: usize, ds: &LabeledDataset) {
        for idx in ds.class_indices(class) {
            if covered[idx] {
                self.counts[idx] += 1;
            }
        }
    }

    /// Population variance of the counts within `class`.
    pub fn class_variance(&self, class: usize, ds: &LabeledDataset) -> f64 {
        let xs: Vec<f64> = ds.class_indices(class).map(|i| self.counts[i] as f64).collect();
        if xs.is_empty() {
            return 0.0;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
    }

    /// Mean of the per-class variances.
    pub fn mean_class_variance(&self, ds: &LabeledDataset) -> f64 {
        let n = ds.n_classes();
        (1..=n).map(|c| self.class_variance(c, ds)).sum::<f64>() / n as f64
    }
}

/// Row indices of class-`class` points covered strictly less often than
/// the class average.
pub fn weak_points(counters: &CoverageCounters, class: usize, ds: &LabeledDataset) -> Vec<usize> {
    let members: Vec<usize> = ds.class_indices(class).collect();
    let total: usize = members.iter().map(|&i| counters.counts[i]).sum();
    let n = members.len();
    members.into_iter().filter(|&i| counters.counts[i] * n < total).collect()
}

/// Fraction of `weak` rows the model covers; 1.0 for an empty weak set.
pub fn merit(m: &WeakModel, weak: &[usize], ds: &LabeledDataset) -> Result<f64> {
    if weak.is_empty() {
        return Ok(1.0);
    }
    let mut hit = 0usize;
    for &i in weak {
        if m.contains(&ds.points()[i])? {
            hit += 1;
        }
    }
    Ok(hit as f64 / weak.len() as f64)
}

fn merit_of(covered: &[bool], weak: &[usize]) -> f64 {
    if weak.is_empty() {
        return 1.0;
    }
    weak.iter().filter(|&&i| covered[i]).count() as f64 / weak.len() as f64
}

/// Why training stopped short of the requested size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exhaustion {
    pub requested: usize,
    pub accepted: usize,
    pub draws: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub ensemble: Ensemble,
    pub draws: u64,
    pub counters: CoverageCounters,
    pub exhausted: Option<Exhaustion>,
}

impl TrainOutcome {
    pub fn is_complete(&self) -> bool {
        self.exhausted.is_none()
    }
}

struct Scored {
    model: WeakModel,
    rating: ModelRating,
    covered: Vec<bool>,
    d: Rational,
    merit: f64,
}

fn score(model: WeakModel, ds: &LabeledDataset, pair: Pair, weak_i: &[usize], weak_j: &[usize]) -> Result<Scored> {
    let covered = ds.points().iter().map(|p| model.contains(p)).collect::<Result<Vec<bool>>>()?;
    let rating = rate(&model, ds)?;
    let d = rating.enrichment_exact(pair);
    let weak = if d < Rational::from_integer(0) { weak_j } else { weak_i };
    let merit = merit_of(&covered, weak);
    Ok(Scored { model, rating, covered, d, merit })
}

/// Trains with random regions drawn from `cfg`.
pub fn train(
    ds: &LabeledDataset,
    cfg: &GeneratorConfig,
    enrich: &EnrichmentPolicy,
    unif: &UniformityMode,
    target_size: usize,
) -> Result<TrainOutcome> {
    let source = RegionGenerator::for_dataset(cfg.clone(), ds)?;
    let mut out = train_with_source(ds, &source, cfg.trials, enrich, unif, target_size)?;
    out.ensemble.set_seed(Some(cfg.seed));
    Ok(out)
}

/// Trains from any candidate source with `trials` draws budgeted per
/// accepted model.
///
/// Threshold-style rounds accept the first qualifying draw. A round runs the
/// full trial budget when either policy is best-of; candidates are then
/// ranked by merit (if merit-best-of) and then by `|d|` (if enrichment is
/// best-of), ties going to the earliest draw. Candidates in one round are
/// scored in parallel; the result equals a sequential run.
pub fn train_with_source(
    ds: &LabeledDataset,
    source: &dyn CandidateSource,
    trials: usize,
    enrich: &EnrichmentPolicy,
    unif: &UniformityMode,
    target_size: usize,
) -> Result<TrainOutcome> {
    if target_size == 0 {
        return Err(SdError::InvalidConfig("target size must be at least 1".into()));
    }
    if trials == 0 {
        return Err(SdError::InvalidConfig("trials must be at least 1".into()));
    }
    if ds.n_classes() < 2 {
        return Err(SdError::InvalidDataset("training needs at least two classes".into()));
    }
    ds.require_all_classes()?;
    enrich.validate(ds.n_classes())?;
    unif.validate()?;

    let pairs = enrich.pairs(ds.n_classes());
    let budget = (trials as u64).saturating_mul(target_size as u64);
    let best_of = enrich.mode == EnrichmentMode::BestOf || *unif == UniformityMode::MeritBestOf;
    let use_merit = matches!(unif, UniformityMode::MeritThreshold(_) | UniformityMode::MeritBestOf);

    let mut ensemble = Ensemble::for_dataset(ds);
    let mut counters = CoverageCounters::new(ds.len());
    let mut draws = 0u64;
    let mut source_dry = false;

    while ensemble.len() < target_size && draws < budget && !source_dry {
        let pair = pairs[ensemble.len() % pairs.len()];
        let (weak_i, weak_j) = if use_merit || *unif == UniformityMode::Biased {
            (weak_points(&counters, pair.i, ds), weak_points(&counters, pair.j, ds))
        } else {
            (Vec::new(), Vec::new())
        };
        let bias: Option<Vec<Vec<f64>>> = (*unif == UniformityMode::Biased)
            .then(|| weak_i.iter().chain(&weak_j).map(|&i| ds.points()[i].coords().to_vec()).collect());
        let bias = bias.as_deref();
        let qualifies = |s: &Scored| {
            enrich.accepts(&s.d)
                && match *unif {
                    UniformityMode::MeritThreshold(theta) => s.merit >= theta,
                    _ => true,
                }
        };

        let chosen = if best_of {
            let n = (trials as u64).min(budget - draws);
            let scored: Vec<Option<Result<Scored>>> = (draws..draws + n)
                .into_par_iter()
                .map(|c| source.candidate(c, bias).map(|m| score(m, ds, pair, &weak_i, &weak_j)))
                .collect();
            let mut best: Option<Scored> = None;
            for s in scored {
                let Some(s) = s else {
                    source_dry = true;
                    break;
                };
                draws += 1;
                let s = s?;
                if !qualifies(&s) {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let by_merit = if *unif == UniformityMode::MeritBestOf {
                            s.merit.partial_cmp(&b.merit).unwrap_or(Ordering::Equal)
                        } else {
                            Ordering::Equal
                        };
                        let by_d = if enrich.mode == EnrichmentMode::BestOf {
                            s.d.abs().cmp(&b.d.abs())
                        } else {
                            Ordering::Equal
                        };
                        by_merit.then(by_d) == Ordering::Greater
                    }
                };
                if better {
                    best = Some(s);
                }
            }
            best
        } else {
            let mut found = None;
            while draws < budget {
                let Some(m) = source.candidate(draws, bias) else {
                    source_dry = true;
                    break;
                };
                draws += 1;
                let s = score(m, ds, pair, &weak_i, &weak_j)?;
                if qualifies(&s) {
                    found = Some(s);
                    break;
                }
            }
            found
        };

        if let Some(s) = chosen {
            let class = if s.d > Rational::from_integer(0) { pair.i } else { pair.j };
            counters.record(&s.covered, class, ds);
            ensemble.push(s.model, s.rating, pair)?;
        }
    }

    let exhausted = (ensemble.len() < target_size).then(|| Exhaustion {
        requested: target_size,
        accepted: ensemble.len(),
        draws,
        reason: if source_dry {
            "candidate source exhausted".to_string()
        } else {
            format!("candidate budget of {budget} draws used up")
        },
    });
    Ok(TrainOutcome { ensemble, draws, counters, exhausted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::repro;

    fn counters_ds(counts: &[usize]) -> (CoverageCounters, LabeledDataset) {
        let points = (0..counts.len()).map(|i| Point::scalar(i as f64, Some(i)).unwrap()).collect();
        let labels = vec![1; counts.len()];
        let ds = LabeledDataset::new("c", points, labels, 2).unwrap();
        (CoverageCounters::from_counts(counts.to_vec()), ds)
    }

    #[test]
    fn weak_point_examples() {
        let (c, ds) = counters_ds(&[2, 2, 2, 2, 2]);
        assert!(weak_points(&c, 1, &ds).is_empty());
        let (c, ds) = counters_ds(&[0, 1, 2, 3, 4]);
        assert_eq!(weak_points(&c, 1, &ds), vec![0, 1]);
        let (c, ds) = counters_ds(&[0, 0, 0]);
        assert!(weak_points(&c, 1, &ds).is_empty());
    }

    #[test]
    fn merit_examples() {
        let ds = repro::training_set();
        let m = WeakModel::subset(1, 10, [0, 2, 9]).unwrap();
        assert_eq!(merit(&m, &[0, 1, 2, 3], &ds).unwrap(), 0.5);
        assert_eq!(merit(&m, &[], &ds).unwrap(), 1.0);
        assert_eq!(merit(&m, &[0, 2], &ds).unwrap(), 1.0);
    }

    fn fixture_source() -> ExhaustiveSource {
        ExhaustiveSource::new(
            repro::fixture_ensemble(false).unwrap().models().iter().map(|r| r.model.clone()).collect(),
        )
    }

    #[test]
    fn exhaustive_threshold_run() {
        let ds = repro::training_set();
        let policy = EnrichmentPolicy::threshold(0.7).with_pair(Pair::new(1, 2).unwrap());
        let out = train_with_source(&ds, &fixture_source(), 252, &policy, &UniformityMode::Off, 252).unwrap();
        assert_eq!(out.ensemble.len(), 2);
        assert_eq!(out.draws, 252);
        let ex = out.exhausted.unwrap();
        assert_eq!(ex.accepted, 2);
        assert_eq!(ex.reason, "candidate source exhausted");
        for r in out.ensemble.models() {
            assert!(r.rating.enrichment(Pair::new(1, 2).unwrap()).abs() >= 0.7);
        }
    }

    #[test]
    fn budget_is_bounded() {
        let ds = repro::training_set();
        let src = SubsetGenerator::new(3, 10, 5).unwrap();
        let policy = EnrichmentPolicy::threshold(1.0);
        let out = train_with_source(&ds, &src, 2, &policy, &UniformityMode::Off, 5).unwrap();
        assert!(out.draws <= 10);
        assert!(out.exhausted.is_some() || out.ensemble.len() == 5);
    }

    #[test]
    fn never_accepts_unenriched() {
        let ds = repro::training_set();
        let src = SubsetGenerator::new(8, 10, 5).unwrap();
        let out = train_with_source(&ds, &src, 3, &EnrichmentPolicy::best_of(), &UniformityMode::Off, 40).unwrap();
        assert_eq!(out.ensemble.len(), 40);
        for r in out.ensemble.models() {
            assert!(r.rating.is_enriched(r.pair));
        }
    }

    #[test]
    fn training_is_deterministic() {
        let ds = repro::training_set();
        let cfg = GeneratorConfig { seed: 99, trials: 5, ..Default::default() };
        for unif in [
            UniformityMode::Off,
            UniformityMode::MeritBestOf,
            UniformityMode::Biased,
            UniformityMode::MeritThreshold(0.5),
        ] {
            let a = train(&ds, &cfg, &EnrichmentPolicy::threshold(0.2), &unif, 30).unwrap();
            let b = train(&ds, &cfg, &EnrichmentPolicy::threshold(0.2), &unif, 30).unwrap();
            assert_eq!(a.ensemble, b.ensemble);
            assert_eq!(a.counters, b.counters);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let ds = repro::training_set();
        let cfg = GeneratorConfig::default();
        assert!(train(&ds, &cfg, &EnrichmentPolicy::threshold(0.1), &UniformityMode::Off, 0).is_err());
        assert!(train(&ds, &cfg, &EnrichmentPolicy::threshold(0.0), &UniformityMode::Off, 1).is_err());
        assert!(train(&ds, &cfg, &EnrichmentPolicy::threshold(0.1), &UniformityMode::MeritThreshold(1.5), 1).is_err());
    }

    #[test]
    fn round_robin_over_three_classes() {
        let points = (0..9).map(|i| Point::new(vec![i as f64, (i % 3) as f64]).unwrap()).collect();
        let ds = LabeledDataset::from_labels("three", points, vec![1, 1, 1, 2, 2, 2, 3, 3, 3]).unwrap();
        let cfg = GeneratorConfig { seed: 4, trials: 50, ..Default::default() };
        let out = train(&ds, &cfg, &EnrichmentPolicy::threshold(0.3), &UniformityMode::Off, 6).unwrap();
        let pairs: Vec<String> = out.ensemble.models().iter().map(|r| r.pair.to_string()).collect();
        assert_eq!(pairs, ["1_2", "1_3", "2_3", "1_2", "1_3", "2_3"]);
    }
}
