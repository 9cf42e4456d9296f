use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use tubelab_core::warped::{FdOrder, TubeGrid};

pub const SCHEMA: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema {0}, expected {SCHEMA}")]
    Schema(u32),
    #[error("config is for experiment {config} but {cli} was requested")]
    ExperimentMismatch { config: Experiment, cli: Experiment },
    #[error("experiment {0} draws random numbers and needs a seed")]
    MissingSeed(Experiment),
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Count,
    Torus,
    Gap,
    Identity,
    Transfer,
    Conditioning,
    Newton,
    Constants,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Count => "count",
            Experiment::Torus => "torus",
            Experiment::Gap => "gap",
            Experiment::Identity => "identity",
            Experiment::Transfer => "transfer",
            Experiment::Conditioning => "conditioning",
            Experiment::Newton => "newton",
            Experiment::Constants => "constants",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rotation parts of the swept tubes: explicit angle lists, or `"random:k"`
/// for k seeded draws per (n, ell) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AngleSpec {
    Explicit(Vec<Vec<f64>>),
    Random(usize),
}

impl FromStr for AngleSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let k = s
            .strip_prefix("random:")
            .ok_or_else(|| format!("expected \"random:k\", got {s:?}"))?;
        let k: usize = k.trim().parse().map_err(|_| format!("bad count in {s:?}"))?;
        if k == 0 {
            return Err("random:0 selects no rotations".into());
        }
        Ok(AngleSpec::Random(k))
    }
}

impl<'de> Deserialize<'de> for AngleSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Lists(Vec<Vec<f64>>),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Lists(v) => Ok(AngleSpec::Explicit(v)),
        }
    }
}

/// Search radius: absolute, or a multiple of the injectivity radius at the
/// basepoint (`"inj"`, `"2inj"`, `"10*inj"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RadiusSpec {
    Absolute(f64),
    InjMultiple(f64),
}

impl RadiusSpec {
    pub fn resolve(self, inj: f64) -> f64 {
        match self {
            RadiusSpec::Absolute(r) => r,
            RadiusSpec::InjMultiple(m) => m * inj,
        }
    }
}

impl FromStr for RadiusSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let Some(head) = s.strip_suffix("inj") else {
            return s
                .parse()
                .map(RadiusSpec::Absolute)
                .map_err(|_| format!("bad radius {s:?}"));
        };
        let head = head.trim().trim_end_matches('*').trim();
        if head.is_empty() {
            return Ok(RadiusSpec::InjMultiple(1.0));
        }
        head.parse()
            .map(RadiusSpec::InjMultiple)
            .map_err(|_| format!("bad radius {s:?}"))
    }
}

impl<'de> Deserialize<'de> for RadiusSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(r) => Ok(RadiusSpec::Absolute(r)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r0: f64,
    pub r1: f64,
    pub dr: f64,
    #[serde(rename = "Lt")]
    pub lt: f64,
    #[serde(default)]
    pub nt: Option<usize>,
    #[serde(default)]
    pub order: Option<FdOrder>,
}

impl GridConfig {
    pub fn build(&self, default_nt: usize, default_order: FdOrder) -> Result<TubeGrid, ConfigError> {
        let order = self.order.unwrap_or(default_order);
        if !(self.dr > 0.0) {
            return Err(invalid("grid.dr", "must be positive"));
        }
        let nr = ((self.r1 - self.r0) / self.dr).round() as usize + 1;
        TubeGrid::with_counts(self.r0, self.r1, nr, self.lt, self.nt.unwrap_or(default_nt), order)
            .map_err(|e| invalid("grid", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_list: Option<Vec<usize>>,
    #[serde(default)]
    pub ell_list: Option<Vec<f64>>,
    #[serde(default)]
    pub angle_spec: Option<AngleSpec>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub r: Option<Vec<RadiusSpec>>,
    /// Distances from the axis for torus basepoints.
    #[serde(default)]
    pub base_radii: Option<Vec<f64>>,
    /// Basepoints per tube in the count sweep, evenly spaced in depth.
    #[serde(default)]
    pub depth_steps: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub beta_override: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Random test fields per dimension in the gap sweep.
    #[serde(default)]
    pub fields: Option<usize>,
    #[serde(default)]
    pub refinements: Option<usize>,
    /// Rows whose observed ratio exceeds this constant count as violations.
    #[serde(default)]
    pub ratio_cap: Option<f64>,
}

fn default_mu() -> f64 {
    tubelab_core::tube::DEFAULT_MU
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        if cfg.schema != SCHEMA {
            return Err(ConfigError::Schema(cfg.schema));
        }
        Ok(cfg)
    }

    /// Dimensions from `n_list`, falling back to `n`, then to `default`.
    pub fn dims(&self, default: &[usize]) -> Vec<usize> {
        match (&self.n_list, self.n) {
            (Some(v), _) => v.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => default.to_vec(),
        }
    }

    pub fn seed_or_fail(&self, exp: Experiment) -> Result<u64, ConfigError> {
        self.seed.ok_or(ConfigError::MissingSeed(exp))
    }

    pub fn needs_seed(&self, exp: Experiment) -> bool {
        match exp {
            Experiment::Count | Experiment::Torus => !matches!(self.angle_spec, Some(AngleSpec::Explicit(_))),
            Experiment::Gap | Experiment::Transfer => true,
            Experiment::Identity | Experiment::Conditioning | Experiment::Newton | Experiment::Constants => false,
        }
    }

    /// Checks ranges shared by all experiments and the ones `exp` reads.
    pub fn validate(&self, exp: Experiment) -> Result<(), ConfigError> {
        if let Some(e) = self.experiment {
            if e != exp {
                return Err(ConfigError::ExperimentMismatch { config: e, cli: exp });
            }
        }
        if self.needs_seed(exp) {
            self.seed_or_fail(exp)?;
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(invalid("mu", "must be positive"));
        }
        let min_n = if exp == Experiment::Count || exp == Experiment::Torus || exp == Experiment::Transfer {
            2
        } else {
            4
        };
        for n in self.dims(&[4]) {
            if n < min_n || n > 64 {
                return Err(invalid("n", format!("{n} outside [{min_n}, 64]")));
            }
        }
        if let Some(ells) = &self.ell_list {
            if ells.is_empty() || ells.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(invalid("ell_list", "needs positive translation lengths"));
            }
        }
        if let Some(AngleSpec::Explicit(specs)) = &self.angle_spec {
            if specs.is_empty() {
                return Err(invalid("angle_spec", "empty list"));
            }
            for n in self.dims(&[4]) {
                if specs.iter().any(|a| 2 * a.len() > n - 1) {
                    return Err(invalid("angle_spec", format!("too many rotation planes for n = {n}")));
                }
            }
        }
        if let Some(r) = &self.r {
            let bad = |s: &RadiusSpec| match *s {
                RadiusSpec::Absolute(v) | RadiusSpec::InjMultiple(v) => !(v > 0.0 && v.is_finite()),
            };
            if r.is_empty() || r.iter().any(bad) {
                return Err(invalid("r", "needs positive radii"));
            }
        }
        if let Some(b) = &self.base_radii {
            if b.is_empty() || b.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
                return Err(invalid("base_radii", "needs nonnegative radii"));
            }
        }
        if let Some(eps) = &self.eps_list {
            if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
                return Err(invalid("eps_list", "needs perturbation sizes in (0, 1)"));
            }
        }
        if let Some(b) = self.beta_override {
            for n in self.dims(&[4]) {
                if n >= 4 {
                    tubelab_core::spectral::gap_constants_with_beta(n, b)
                        .map_err(|e| invalid("beta_override", e.to_string()))?;
                }
            }
        }
        for (field, v) in [
            ("depth_steps", self.depth_steps),
            ("samples", self.samples),
            ("fields", self.fields),
            ("refinements", self.refinements),
        ] {
            if v == Some(0) {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        if let Some(c) = self.ratio_cap {
            if !(c > 0.0) {
                return Err(invalid("ratio_cap", "must be positive"));
            }
        }
        Ok(())
    }
}

pub(crate) fn require<T>(v: Option<T>, field: &'static str) -> Result<T, ConfigError> {
    v.ok_or_else(|| invalid(field, "missing"))
}
