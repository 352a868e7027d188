use super::{EnrichmentMode, EnrichmentPolicy, GeneratorConfig, ModelKind, PairTarget, UniformityMode};
use crate::error::{Result, SdError};
use crate::ratings::Pair;

/// Everything `train` needs besides the dataset.
///
/// The text form is flat `key = value` lines; `#` starts a comment. Keys:
/// `seed`, `target_size`, `trials`, `enrich_threshold`, `enrich_best_of`,
/// `uniformity`, `kinds`, `min_size`, `max_size`, `restrict_bbox`,
/// `components`, `pair`. `enrich_best_of = T` and `uniformity = best-of:T`
/// also set the shared trial budget.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub generator: GeneratorConfig,
    pub enrichment: EnrichmentPolicy,
    pub uniformity: UniformityMode,
    pub target_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            generator: GeneratorConfig::default(),
            enrichment: EnrichmentPolicy::threshold(0.1),
            uniformity: UniformityMode::Off,
            target_size: 100,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| SdError::InvalidConfig(format!("bad value '{value}' for {key}")))
}

impl TrainConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SdError::InvalidConfig(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| SdError::InvalidConfig(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    /// Applies one setting. Keys accept `-` or `_` as separators.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('-', "_").as_str() {
            "seed" => self.generator.seed = parse_num(key, value)?,
            "target_size" => self.target_size = parse_num(key, value)?,
            "trials" => self.generator.trials = parse_num(key, value)?,
            "enrich_threshold" => self.enrichment.mode = EnrichmentMode::Threshold(parse_num(key, value)?),
            "enrich_best_of" => {
                self.generator.trials = parse_num(key, value)?;
                self.enrichment.mode = EnrichmentMode::BestOf;
            }
            "uniformity" => self.uniformity = self.parse_uniformity(value)?,
            "kinds" => self.generator.kinds = ModelKind::parse_list(value)?,
            "min_size" => self.generator.min_size = parse_num(key, value)?,
            "max_size" => self.generator.max_size = parse_num(key, value)?,
            "restrict_bbox" => self.generator.restrict_to_bbox = parse_num(key, value)?,
            "components" => self.generator.components = parse_num(key, value)?,
            "pair" => self.enrichment.target = parse_pair(value)?,
            _ => return Err(SdError::InvalidConfig(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    fn parse_uniformity(&mut self, value: &str) -> Result<UniformityMode> {
        let (mode, arg) = match value.split_once(':') {
            Some((m, a)) => (m.trim(), Some(a.trim())),
            None => (value.trim(), None),
        };
        Ok(match (mode, arg) {
            ("off", None) => UniformityMode::Off,
            ("biased", None) => UniformityMode::Biased,
            ("threshold", Some(a)) => UniformityMode::MeritThreshold(parse_num("uniformity", a)?),
            ("best-of" | "best_of", Some(a)) => {
                self.generator.trials = parse_num("uniformity", a)?;
                UniformityMode::MeritBestOf
            }
            _ => {
                return Err(SdError::InvalidConfig(format!(
                    "uniformity must be off, threshold:x, best-of:T or biased, got '{value}'"
                )))
            }
        })
    }

    pub fn validate(&self, n_classes: usize) -> Result<()> {
        self.generator.validate()?;
        self.enrichment.validate(n_classes)?;
        self.uniformity.validate()?;
        if self.target_size == 0 {
            return Err(SdError::InvalidConfig("target size must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical text form; `parse` of the result gives back `self`.
    pub fn to_text(&self) -> String {
        let g = &self.generator;
        let kinds: Vec<&str> = g.kinds.iter().map(|k| k.name()).collect();
        let mut out = format!("seed = {}\ntarget_size = {}\ntrials = {}\n", g.seed, self.target_size, g.trials);
        match self.enrichment.mode {
            EnrichmentMode::Threshold(t) => out += &format!("enrich_threshold = {t}\n"),
            EnrichmentMode::BestOf => out += &format!("enrich_best_of = {}\n", g.trials),
        }
        out += &match self.uniformity {
            UniformityMode::Off => "uniformity = off\n".to_string(),
            UniformityMode::Biased => "uniformity = biased\n".to_string(),
            UniformityMode::MeritThreshold(t) => format!("uniformity = threshold:{t}\n"),
            UniformityMode::MeritBestOf => format!("uniformity = best-of:{}\n", g.trials),
        };
        out += &format!(
            "kinds = {}\nmin_size = {}\nmax_size = {}\nrestrict_bbox = {}\ncomponents = {}\n",
            kinds.join(","),
            g.min_size,
            g.max_size,
            g.restrict_to_bbox,
            g.components
        );
        out += &match self.enrichment.target {
            PairTarget::RoundRobin => "pair = round-robin\n".to_string(),
            PairTarget::Fixed(p) => format!("pair = {},{}\n", p.i, p.j),
        };
        out
    }
}

fn parse_pair(value: &str) -> Result<PairTarget> {
    if matches!(value, "round-robin" | "round_robin" | "all") {
        return Ok(PairTarget::RoundRobin);
    }
    let (i, j) = value
        .split_once([',', '_'])
        .ok_or_else(|| SdError::InvalidConfig(format!("pair must look like 1,2, got '{value}'")))?;
    Ok(PairTarget::Fixed(Pair::new(parse_num("pair", i.trim())?, parse_num("pair", j.trim())?)?))
}
