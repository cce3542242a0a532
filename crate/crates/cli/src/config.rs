//! Per-experiment JSON configuration.
//!
//! The keys `experiment`, `out`, `solver`, `tol` and `max_level` are shared by
//! every experiment; everything else is checked against the experiment's own
//! schema, and unknown keys are rejected.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use torsion_core::closed_form::RadialProfile;
use torsion_core::fem::{SolveOptions, SolverKind};
use torsion_core::geometry::MAX_LEVEL;
use torsion_core::shape_calculus::{LevelPlan, DEFAULT_FD_LEVEL};
use torsion_core::DomainSpec;

use crate::Experiment;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Common {
    pub experiment: Option<String>,
    pub out: Option<PathBuf>,
    pub solver: Option<SolverKind>,
    pub tol: Option<f64>,
    pub max_level: Option<usize>,
}

impl Common {
    pub fn solve_options(&self) -> SolveOptions {
        let mut opts = SolveOptions::default();
        if let Some(s) = self.solver {
            opts.solver = s;
        }
        if let Some(t) = self.tol {
            opts.tol = t;
        }
        opts
    }

    pub fn max_level(&self) -> usize {
        self.max_level.unwrap_or(MAX_LEVEL)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("tol must lie in (0, 1), got {t}"));
            }
        }
        if self.max_level() > MAX_LEVEL {
            return bad(format!("max_level must not exceed {MAX_LEVEL}"));
        }
        Ok(())
    }

    fn check_level(&self, what: &str, level: usize) -> Result<(), ConfigError> {
        if level > self.max_level() {
            return bad(format!("{what} {level} exceeds max_level {}", self.max_level()));
        }
        Ok(())
    }
}

/// Either an explicit list or an inclusive range.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SideSet {
    List(Vec<usize>),
    Range { from: usize, to: usize },
}

impl SideSet {
    pub fn sides(&self) -> Vec<usize> {
        match self {
            SideSet::List(v) => v.clone(),
            SideSet::Range { from, to } => (*from..=*to).collect(),
        }
    }
}

fn check_sides(sides: &[usize], max: usize) -> Result<(), ConfigError> {
    if sides.is_empty() {
        return bad("sides must not be empty");
    }
    if let Some(n) = sides.iter().find(|&&n| n < 3 || n > max) {
        return bad(format!("side count {n} outside [3, {max}]"));
    }
    if sides.windows(2).any(|w| w[0] >= w[1]) {
        return bad("sides must be strictly increasing");
    }
    Ok(())
}

fn check_profile(profile: &RadialProfile) -> Result<(), ConfigError> {
    match *profile {
        RadialProfile::Constant { value } if !(value.is_finite() && value > 0.0) => {
            bad(format!("constant source must be positive, got {value}"))
        }
        RadialProfile::Power { exponent, scale }
            if !(exponent.is_finite() && exponent >= 0.0 && scale.is_finite() && scale > 0.0) =>
        {
            bad("power source needs exponent >= 0 and scale > 0")
        }
        _ => Ok(()),
    }
}

fn check_domain(domain: &DomainSpec) -> Result<(), ConfigError> {
    domain.validate().map_err(|e| ConfigError(e.to_string()))?;
    if let DomainSpec::Box { half_widths } = domain {
        if half_widths.len() != 2 {
            return bad("only two-dimensional boxes can be meshed");
        }
    }
    Ok(())
}

fn default_area() -> f64 {
    PI
}

fn default_one() -> f64 {
    1.0
}

/// Closed-form energies of regular polygons.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormConfig {
    pub sides: SideSet,
    #[serde(default = "default_area")]
    pub area: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    #[default]
    MeanZero,
    Robin,
    Dirichlet,
}

/// One FEM solve per level on a single domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub domain: DomainSpec,
    pub levels: Vec<usize>,
    #[serde(default)]
    pub problem: ProblemKind,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub source: RadialProfile,
    /// Expected `T`, checked to `rel_tol` at the finest level.
    pub expect_t: Option<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_lambda_tol")]
    pub lambda_tol: f64,
    #[serde(default = "default_mean_tol")]
    pub mean_tol: f64,
    /// Writes the finest mesh and its solution next to the reports.
    #[serde(default)]
    pub dump: bool,
}

fn default_rel_tol() -> f64 {
    1e-3
}

fn default_lambda_tol() -> f64 {
    1e-12
}

fn default_mean_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonSweepConfig {
    pub sides: SideSet,
    pub levels: LevelPlan,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_min_order")]
    pub min_order: f64,
}

fn default_min_order() -> f64 {
    1.8
}

/// Finite-difference second variation along `r = R + t cos(kθ)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    #[serde(default = "default_one")]
    pub radius: f64,
    pub modes: Vec<u32>,
    /// `f = r^s`.
    #[serde(default)]
    pub exponent: f64,
    #[serde(default = "default_fd_level")]
    pub level: usize,
    pub t0: Option<f64>,
    /// Relative agreement with the oracle where it is nonzero.
    #[serde(default = "default_fd_rel_tol")]
    pub rel_tol: f64,
    /// Absolute bound where the oracle vanishes.
    #[serde(default = "default_fd_zero_tol")]
    pub zero_tol: f64,
    /// Robin parameters for the exact stability condition.
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
}

fn default_fd_level() -> usize {
    DEFAULT_FD_LEVEL
}

fn default_fd_rel_tol() -> f64 {
    0.05
}

fn default_fd_zero_tol() -> f64 {
    1e-2
}

fn default_betas() -> Vec<f64> {
    vec![0.0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusConfig {
    pub b: Vec<f64>,
    #[serde(default = "default_annulus_level")]
    pub annulus_level: usize,
    #[serde(default = "default_annulus_level")]
    pub disk_level: usize,
    #[serde(default = "default_annulus_tol")]
    pub rel_tol: f64,
    /// Dimensions for the stationarity-gap check.
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
}

fn default_annulus_level() -> usize {
    5
}

fn default_annulus_tol() -> f64 {
    1e-2
}

fn default_dims() -> Vec<usize> {
    vec![2, 3, 4]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxOscConfig {
    pub n: usize,
    pub eps: Vec<f64>,
    #[serde(default = "default_exponent_tol")]
    pub exponent_tol: f64,
}

fn default_exponent_tol() -> f64 {
    0.05
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobinIdentityConfig {
    pub domains: Vec<DomainSpec>,
    pub betas: Vec<f64>,
    #[serde(default = "default_robin_level")]
    pub level: usize,
    #[serde(default = "default_mean_tol")]
    pub tol: f64,
    /// Bound on `|mean trace − R/(2β)|` for disk domains.
    #[serde(default = "default_fd_zero_tol")]
    pub trace_tol: f64,
}

fn default_robin_level() -> usize {
    4
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerrinGapConfig {
    pub n: usize,
    pub eps: Vec<f64>,
}

#[derive(Clone, Debug)]
pub enum Settings {
    ClosedForm(ClosedFormConfig),
    Solve(SolveConfig),
    PolygonSweep(PolygonSweepConfig),
    Stability(StabilityConfig),
    AnnulusCompare(AnnulusConfig),
    BoxOsc(BoxOscConfig),
    RobinIdentity(RobinIdentityConfig),
    SerrinGap(SerrinGapConfig),
}

#[derive(Clone, Debug)]
pub struct Config {
    pub common: Common,
    pub settings: Settings,
    /// The document as read, for the run manifest.
    pub raw: Value,
}

const COMMON_KEYS: [&str; 5] = ["experiment", "out", "solver", "tol", "max_level"];

fn parse_as<T: DeserializeOwned>(rest: Map<String, Value>) -> Result<T, ConfigError> {
    serde_json::from_value(Value::Object(rest)).map_err(|e| ConfigError(e.to_string()))
}

fn finite_positive(what: &str, v: f64) -> Result<(), ConfigError> {
    if !(v.is_finite() && v > 0.0) {
        return bad(format!("{what} must be positive, got {v}"));
    }
    Ok(())
}

impl Config {
    pub fn parse(experiment: Experiment, text: &str) -> Result<Config, ConfigError> {
        let raw: Value = serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid JSON: {e}")))?;
        let Value::Object(mut rest) = raw.clone() else {
            return bad("config must be a JSON object");
        };
        let mut common = Map::new();
        for key in COMMON_KEYS {
            if let Some(v) = rest.remove(key) {
                common.insert(key.to_string(), v);
            }
        }
        let common: Common = parse_as(common)?;
        if let Some(name) = &common.experiment {
            if name != experiment.name() {
                return bad(format!(
                    "config is for experiment '{name}' but '{}' was requested",
                    experiment.name()
                ));
            }
        }
        let settings = match experiment {
            Experiment::ClosedForm => Settings::ClosedForm(parse_as(rest)?),
            Experiment::Solve => Settings::Solve(parse_as(rest)?),
            Experiment::PolygonSweep => Settings::PolygonSweep(parse_as(rest)?),
            Experiment::Stability => Settings::Stability(parse_as(rest)?),
            Experiment::AnnulusCompare => Settings::AnnulusCompare(parse_as(rest)?),
            Experiment::BoxOsc => Settings::BoxOsc(parse_as(rest)?),
            Experiment::RobinIdentity => Settings::RobinIdentity(parse_as(rest)?),
            Experiment::SerrinGap => Settings::SerrinGap(parse_as(rest)?),
        };
        Ok(Config { common, settings, raw })
    }

    /// Checks every parameter against the preconditions of the operation it feeds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let common = &self.common;
        common.validate()?;
        match &self.settings {
            Settings::ClosedForm(c) => {
                check_sides(&c.sides.sides(), 100_000)?;
                finite_positive("area", c.area)
            }
            Settings::Solve(c) => {
                check_domain(&c.domain)?;
                check_profile(&c.source)?;
                if c.levels.is_empty() || c.levels.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("levels must be non-empty and strictly increasing");
                }
                common.check_level("level", *c.levels.last().unwrap())?;
                if !(c.beta.is_finite() && c.beta >= 0.0) {
                    return bad(format!("beta must be non-negative, got {}", c.beta));
                }
                if c.problem == ProblemKind::Robin && c.beta == 0.0 {
                    return bad("the Robin problem needs beta > 0");
                }
                if c.problem == ProblemKind::Dirichlet && c.beta != 0.0 {
                    return bad("beta is not used by the Dirichlet problem");
                }
                finite_positive("rel_tol", c.rel_tol)?;
                finite_positive("lambda_tol", c.lambda_tol)?;
                finite_positive("mean_tol", c.mean_tol)
            }
            Settings::PolygonSweep(c) => {
                check_sides(&c.sides.sides(), 64)?;
                match &c.levels {
                    LevelPlan::Fixed(levels) => {
                        if let Some(&l) = levels.last() {
                            common.check_level("level", l)?;
                        }
                    }
                    LevelPlan::TargetH { h_max, count } => {
                        finite_positive("h_max", *h_max)?;
                        if *count < 2 {
                            return bad("count must be at least 2");
                        }
                    }
                }
                finite_positive("rel_tol", c.rel_tol)?;
                finite_positive("min_order", c.min_order)
            }
            Settings::Stability(c) => {
                finite_positive("radius", c.radius)?;
                if c.modes.is_empty() || c.modes.contains(&0) {
                    return bad("modes must be non-empty and at least 1");
                }
                if !(c.exponent.is_finite() && c.exponent >= 0.0) {
                    return bad(format!("exponent must be non-negative, got {}", c.exponent));
                }
                common.check_level("level", c.level)?;
                if let Some(t0) = c.t0 {
                    if !(t0 > 0.0 && t0 < 0.5 * c.radius) {
                        return bad("t0 must lie in (0, R/2)");
                    }
                }
                if c.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
                    return bad("betas must be non-negative");
                }
                finite_positive("rel_tol", c.rel_tol)?;
                finite_positive("zero_tol", c.zero_tol)
            }
            Settings::AnnulusCompare(c) => {
                if c.b.is_empty() || c.b.iter().any(|b| !(b.is_finite() && *b > 1.0)) {
                    return bad("b values must exceed 1");
                }
                if c.b.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("b values must be strictly increasing");
                }
                if c.dims.iter().any(|&n| n < 2) {
                    return bad("dims must be at least 2");
                }
                common.check_level("annulus_level", c.annulus_level)?;
                common.check_level("disk_level", c.disk_level)?;
                finite_positive("rel_tol", c.rel_tol)
            }
            Settings::BoxOsc(c) => {
                if c.n < 2 {
                    return bad("n must be at least 2");
                }
                check_eps(&c.eps)?;
                if c.n >= 3 && c.eps.len() < 2 {
                    return bad("fitting an exponent needs at least two eps values");
                }
                finite_positive("exponent_tol", c.exponent_tol)
            }
            Settings::RobinIdentity(c) => {
                if c.domains.is_empty() {
                    return bad("domains must not be empty");
                }
                for d in &c.domains {
                    check_domain(d)?;
                }
                if c.betas.is_empty() || c.betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
                    return bad("betas must be positive");
                }
                common.check_level("level", c.level)?;
                finite_positive("tol", c.tol)?;
                finite_positive("trace_tol", c.trace_tol)
            }
            Settings::SerrinGap(c) => {
                if c.n == 2 {
                    return bad("n = 2 is the open case and is not reported");
                }
                if c.n < 2 {
                    return bad("n must be at least 3");
                }
                check_eps(&c.eps)
            }
        }
    }
}

fn check_eps(eps: &[f64]) -> Result<(), ConfigError> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return bad("eps values must lie in (0, 1]");
    }
    if eps.windows(2).any(|w| w[0] <= w[1]) {
        return bad("eps values must be strictly decreasing");
    }
    Ok(())
}
