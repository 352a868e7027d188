use std::fmt;
use std::str::FromStr;

use super::rng::SplitMix64;
use crate::error::{Result, SdError};
use crate::geometry::{BoundingBox, LabeledDataset, RegionPrimitive, Side, WeakModel};

/// Primitive shapes the generator can draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    HalfSpace,
    Bisector,
    Slab,
    Hypercube,
    L1Ball,
    L2Ball,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::HalfSpace,
        ModelKind::Bisector,
        ModelKind::Slab,
        ModelKind::Hypercube,
        ModelKind::L1Ball,
        ModelKind::L2Ball,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::HalfSpace => "halfspace",
            ModelKind::Bisector => "bisector",
            ModelKind::Slab => "slab",
            ModelKind::Hypercube => "hypercube",
            ModelKind::L1Ball => "l1ball",
            ModelKind::L2Ball => "l2ball",
        }
    }

    /// Parses a comma-separated list such as `slab,l2ball`, or `all`.
    pub fn parse_list(text: &str) -> Result<Vec<ModelKind>> {
        if text.trim() == "all" {
            return Ok(ModelKind::ALL.to_vec());
        }
        let mut kinds = Vec::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let kind: ModelKind = part.parse()?;
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        if kinds.is_empty() {
            return Err(SdError::InvalidConfig("no model kinds given".into()));
        }
        Ok(kinds)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = SdError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "halfspace" => ModelKind::HalfSpace,
            "bisector" => ModelKind::Bisector,
            "slab" => ModelKind::Slab,
            "hypercube" | "cube" | "box" => ModelKind::Hypercube,
            "l1ball" | "l1" => ModelKind::L1Ball,
            "l2ball" | "l2" | "ball" => ModelKind::L2Ball,
            _ => return Err(SdError::InvalidConfig(format!("unknown model kind '{s}'"))),
        })
    }
}

/// Parameters of the random region generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub kinds: Vec<ModelKind>,
    /// Keep centers and thresholds inside the training bounding box. When off,
    /// the box is widened by half its range on every side.
    pub restrict_to_bbox: bool,
    /// Size of a drawn shape as a fraction of the sampling range, per axis.
    pub min_size: f64,
    pub max_size: f64,
    pub seed: u64,
    /// Candidate budget per accepted model.
    pub trials: usize,
    /// Number of primitives unioned into one model.
    pub components: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            kinds: ModelKind::ALL.to_vec(),
            restrict_to_bbox: true,
            min_size: 0.05,
            max_size: 0.5,
            seed: 0,
            trials: 10,
            components: 1,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SdError::InvalidConfig(msg.into()));
        if self.kinds.is_empty() {
            return bad("at least one model kind must be enabled");
        }
        if !(self.min_size.is_finite() && self.max_size.is_finite()) {
            return bad("size fractions must be finite");
        }
        if !(0.0 < self.min_size && self.min_size <= self.max_size) {
            return bad("size fractions need 0 < min_size <= max_size");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.components == 0 {
            return bad("components must be at least 1");
        }
        Ok(())
    }
}

/// A deterministic supply of candidate models indexed by draw counter.
///
/// `bias` holds coordinates of current weak points; sources that cannot use
/// it ignore it. Returning `None` means the source is exhausted.
pub trait CandidateSource: Sync {
    fn candidate(&self, counter: u64, bias: Option<&[Vec<f64>]>) -> Option<WeakModel>;
}

/// Random geometric regions built from the enabled primitive kinds.
#[derive(Debug, Clone)]
pub struct RegionGenerator {
    cfg: GeneratorConfig,
    low: Vec<f64>,
    span: Vec<f64>,
}

impl RegionGenerator {
    pub fn new(cfg: GeneratorConfig, bbox: &BoundingBox) -> Result<Self> {
        cfg.validate()?;
        let mut low = Vec::with_capacity(bbox.dim());
        let mut span = Vec::with_capacity(bbox.dim());
        for k in 0..bbox.dim() {
            let mut range = bbox.range(k);
            let mut lo = bbox.min[k];
            if range <= 0.0 {
                range = 1.0;
                lo -= 0.5;
            }
            if !cfg.restrict_to_bbox {
                lo -= range / 2.0;
                range *= 2.0;
            }
            low.push(lo);
            span.push(range);
        }
        Ok(RegionGenerator { cfg, low, span })
    }

    pub fn for_dataset(cfg: GeneratorConfig, ds: &LabeledDataset) -> Result<Self> {
        let bbox = ds.bounding_box().ok_or_else(|| SdError::InvalidDataset("training set is empty".into()))?;
        RegionGenerator::new(cfg, &bbox)
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    /// Corner and extent of the sampling box.
    pub fn domain(&self) -> (&[f64], &[f64]) {
        (&self.low, &self.span)
    }

    fn uniform_point(&self, rng: &mut SplitMix64) -> Vec<f64> {
        self.low.iter().zip(&self.span).map(|(lo, s)| rng.uniform(*lo, lo + s)).collect()
    }

    fn center(&self, rng: &mut SplitMix64, bias: Option<&[Vec<f64>]>) -> Vec<f64> {
        match bias {
            Some(weak) if !weak.is_empty() => weak[rng.below(weak.len())].clone(),
            _ => self.uniform_point(rng),
        }
    }

    fn size(&self, rng: &mut SplitMix64) -> f64 {
        rng.uniform(self.cfg.min_size, self.cfg.max_size)
    }

    fn primitive(&self, kind: ModelKind, rng: &mut SplitMix64, bias: Option<&[Vec<f64>]>) -> RegionPrimitive {
        let dim = self.dim();
        match kind {
            ModelKind::HalfSpace => {
                let axis = rng.below(dim);
                let threshold = self.center(rng, bias)[axis];
                let side = if rng.coin() { Side::Above } else { Side::Below };
                RegionPrimitive::HalfSpace { axis, threshold, side }
            }
            ModelKind::Bisector => {
                let anchor = self.center(rng, bias);
                let mut other = self.uniform_point(rng);
                if other == anchor {
                    other[0] += self.span[0];
                }
                RegionPrimitive::Bisector { anchor, other }
            }
            ModelKind::Slab => {
                let axis = rng.below(dim);
                let c = self.center(rng, bias)[axis];
                let half = self.size(rng) * self.span[axis] / 2.0;
                RegionPrimitive::Slab { axis, low: c - half, high: c + half }
            }
            ModelKind::Hypercube => {
                let center = self.center(rng, bias);
                let half_edges = self.span.iter().map(|s| self.size(rng) * s / 2.0).collect();
                RegionPrimitive::Hypercube { center, half_edges }
            }
            ModelKind::L1Ball | ModelKind::L2Ball => {
                let center = self.center(rng, bias);
                let axis = rng.below(dim);
                let radius = self.size(rng) * self.span[axis];
                if kind == ModelKind::L1Ball {
                    RegionPrimitive::L1Ball { center, radius }
                } else {
                    RegionPrimitive::L2Ball { center, radius }
                }
            }
        }
    }

    /// Candidate number `counter`; a pure function of the seed and counter.
    pub fn generate(&self, counter: u64, bias: Option<&[Vec<f64>]>) -> WeakModel {
        let mut rng = SplitMix64::for_candidate(self.cfg.seed, counter);
        let terms = (0..self.cfg.components)
            .map(|_| {
                let kind = self.cfg.kinds[rng.below(self.cfg.kinds.len())];
                vec![self.primitive(kind, &mut rng, bias)]
            })
            .collect();
        WeakModel::geometric(counter, self.dim(), terms).expect("generated primitives are valid by construction")
    }
}

impl CandidateSource for RegionGenerator {
    fn candidate(&self, counter: u64, bias: Option<&[Vec<f64>]>) -> Option<WeakModel> {
        Some(self.generate(counter, bias))
    }
}

/// Draw `counter` from `cfg` over `bbox`.
pub fn generate_candidate(cfg: &GeneratorConfig, bbox: &BoundingBox, counter: u64) -> Result<WeakModel> {
    Ok(RegionGenerator::new(cfg.clone(), bbox)?.generate(counter, None))
}

/// A fixed list of models, handed out in order.
#[derive(Debug, Clone)]
pub struct ExhaustiveSource {
    models: Vec<WeakModel>,
}

impl ExhaustiveSource {
    pub fn new(models: Vec<WeakModel>) -> Self {
        ExhaustiveSource { models }
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

impl CandidateSource for ExhaustiveSource {
    fn candidate(&self, counter: u64, _bias: Option<&[Vec<f64>]>) -> Option<WeakModel> {
        self.models.get(usize::try_from(counter).ok()?).cloned()
    }
}

/// Random explicit subsets of fixed size over point ids `0..universe`.
#[derive(Debug, Clone)]
pub struct SubsetGenerator {
    seed: u64,
    universe: usize,
    size: usize,
}

impl SubsetGenerator {
    pub fn new(seed: u64, universe: usize, size: usize) -> Result<Self> {
        if size == 0 || size > universe {
            return Err(SdError::InvalidConfig(format!("subset size {size} must be in 1..={universe}")));
        }
        Ok(SubsetGenerator { seed, universe, size })
    }
}

impl CandidateSource for SubsetGenerator {
    fn candidate(&self, counter: u64, _bias: Option<&[Vec<f64>]>) -> Option<WeakModel> {
        let mut rng = SplitMix64::for_candidate(self.seed, counter);
        let mut ids: Vec<usize> = (0..self.universe).collect();
        for k in 0..self.size {
            let j = k + rng.below(self.universe - k);
            ids.swap(k, j);
        }
        ids.truncate(self.size);
        Some(WeakModel::subset(counter, self.universe, ids).expect("ids are in range"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Region;

    fn bbox() -> BoundingBox {
        BoundingBox { min: vec![0.0, -1.0], max: vec![10.0, 1.0] }
    }

    fn single(kind: ModelKind, seed: u64) -> RegionGenerator {
        let cfg = GeneratorConfig { kinds: vec![kind], seed, ..Default::default() };
        RegionGenerator::new(cfg, &bbox()).unwrap()
    }

    fn only_primitive(m: &WeakModel) -> RegionPrimitive {
        match m.region() {
            Region::Geometric { terms, .. } => terms[0][0].clone(),
            _ => panic!("expected geometric model"),
        }
    }

    #[test]
    fn same_seed_and_counter_give_same_model() {
        let g = RegionGenerator::new(GeneratorConfig { seed: 42, ..Default::default() }, &bbox()).unwrap();
        for c in 0..50 {
            assert_eq!(g.generate(c, None), g.generate(c, None));
        }
        let h = RegionGenerator::new(GeneratorConfig { seed: 43, ..Default::default() }, &bbox()).unwrap();
        assert!((0..20).any(|c| g.generate(c, None) != h.generate(c, None)));
    }

    #[test]
    fn hypercube_center_inside_bbox() {
        let g = single(ModelKind::Hypercube, 5);
        for c in 0..200 {
            match only_primitive(&g.generate(c, None)) {
                RegionPrimitive::Hypercube { center, half_edges } => {
                    assert!(bbox().contains(&center));
                    for (k, h) in half_edges.iter().enumerate() {
                        let r = bbox().range(k);
                        assert!(*h >= 0.05 * r / 2.0 && *h <= 0.5 * r / 2.0);
                    }
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn slab_is_ordered() {
        let g = single(ModelKind::Slab, 9);
        for c in 0..200 {
            match only_primitive(&g.generate(c, None)) {
                RegionPrimitive::Slab { low, high, .. } => assert!(low < high),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn every_kind_validates() {
        for kind in ModelKind::ALL {
            let g = single(kind, 1);
            for c in 0..50 {
                g.generate(c, None).validate().unwrap();
            }
        }
    }

    #[test]
    fn unrestricted_domain_is_wider() {
        let cfg = GeneratorConfig { restrict_to_bbox: false, ..Default::default() };
        let g = RegionGenerator::new(cfg, &bbox()).unwrap();
        let (low, span) = g.domain();
        assert_eq!(low, &[-5.0, -2.0]);
        assert_eq!(span, &[20.0, 4.0]);
    }

    #[test]
    fn degenerate_axis_gets_unit_range() {
        let b = BoundingBox { min: vec![3.0], max: vec![3.0] };
        let g = RegionGenerator::new(GeneratorConfig::default(), &b).unwrap();
        assert_eq!(g.domain(), (&[2.5][..], &[1.0][..]));
    }

    #[test]
    fn biased_centers_come_from_weak_points() {
        let g = single(ModelKind::L2Ball, 3);
        let weak = vec![vec![1.0, 0.5], vec![7.0, -0.5]];
        for c in 0..50 {
            match only_primitive(&g.generate(c, Some(&weak))) {
                RegionPrimitive::L2Ball { center, .. } => assert!(weak.contains(&center)),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(GeneratorConfig { kinds: vec![], ..Default::default() }.validate().is_err());
        assert!(GeneratorConfig { min_size: 0.6, max_size: 0.5, ..Default::default() }.validate().is_err());
        assert!(GeneratorConfig { trials: 0, ..Default::default() }.validate().is_err());
        assert!(GeneratorConfig::default().validate().is_ok());
    }

    #[test]
    fn kind_lists() {
        assert_eq!(
            ModelKind::parse_list("slab, cube,l2").unwrap(),
            vec![ModelKind::Slab, ModelKind::Hypercube, ModelKind::L2Ball]
        );
        assert_eq!(ModelKind::parse_list("all").unwrap().len(), 6);
        assert!(ModelKind::parse_list("torus").is_err());
        assert!(ModelKind::parse_list(" , ").is_err());
    }

    #[test]
    fn subsets_have_requested_size() {
        let g = SubsetGenerator::new(11, 10, 5).unwrap();
        for c in 0..100 {
            let m = g.candidate(c, None).unwrap();
            assert_eq!(m.subset_ids().unwrap().len(), 5);
            assert_eq!(Some(m), g.candidate(c, None));
        }
        assert!(SubsetGenerator::new(0, 3, 4).is_err());
    }

    #[test]
    fn exhaustive_source_runs_out() {
        let src = ExhaustiveSource::new(vec![WeakModel::subset(1, 3, [0]).unwrap()]);
        assert!(src.candidate(0, None).is_some());
        assert!(src.candidate(1, None).is_none());
    }
}
