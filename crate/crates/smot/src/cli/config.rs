use crate::curve::CurveMode;
use crate::marginals::{FamilyKind, FamilySpec};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use super::CliError;

/// Schema version accepted by this build.
pub const CONFIG_VERSION: u32 = 1;

/// A run configuration as read from JSON. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub family: FamilySpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub curve_mode: CurveMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duality: Option<DualityConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    #[default]
    Decreasing,
    Increasing,
}

/// Block for `dump-coupling`: the pair `(mu_t, mu_{t + eps})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub t: f64,
    pub eps: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub kind: CouplingKind,
}

/// Block for `transition-curve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    #[serde(default = "default_curve_times")]
    pub n_times: usize,
    /// Step sizes for the one-period phase points reported next to `x1(t)`.
    #[serde(default)]
    pub eps_sweep: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Sde,
    Discrete,
    Increasing,
}

/// Block for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub scheme: SchemeName,
    pub n_paths: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Number of periods of the discrete chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Times reported in `stats.csv`; defaults to the start time, 0.25, 0.5, 0.75 and 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_times: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub write_paths: bool,
    /// Sampling step of the optional dense dump `dense.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_dt: Option<f64>,
    #[serde(default = "default_dense_paths")]
    pub dense_paths: usize,
    /// Largest admissible KS distance; exceeding it fails the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_threshold: Option<f64>,
}

/// Block for `duality-gap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualityConfig {
    #[serde(default = "default_cost")]
    pub cost: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_duality_paths")]
    pub n_paths: usize,
    /// Hedge tolerance; defaults to `1e-3` scaled by `dt / 1e-3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_hedge: Option<f64>,
    #[serde(default = "default_violation")]
    pub max_violation_fraction: f64,
    /// Allowance added to three standard errors in the gap check.
    #[serde(default = "default_gap")]
    pub gap_tolerance: f64,
    /// Periods of an extra discrete-chain ensemble checked against the same hedge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_n: Option<usize>,
    #[serde(default = "default_true")]
    pub write_residuals: bool,
}

fn default_grid() -> usize {
    201
}
fn default_curve_times() -> usize {
    101
}
fn default_dt() -> f64 {
    1e-3
}
fn default_true() -> bool {
    true
}
fn default_dense_paths() -> usize {
    100
}
fn default_cost() -> String {
    "default".into()
}
fn default_duality_paths() -> usize {
    10_000
}
fn default_violation() -> f64 {
    0.01
}
fn default_gap() -> f64 {
    1e-3
}

/// The subcommands, used to select which block must be present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    DumpCoupling,
    TransitionCurve,
    Simulate,
    DualityGap,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DumpCoupling => "dump-coupling",
            Command::TransitionCurve => "transition-curve",
            Command::Simulate => "simulate",
            Command::DualityGap => "duality-gap",
        }
    }
}

impl RunConfig {
    /// A minimal configuration for `family` with no command blocks.
    pub fn new(family: FamilySpec) -> Self {
        Self {
            version: CONFIG_VERSION,
            family,
            seed: 0,
            output_dir: None,
            curve_mode: CurveMode::default(),
            coupling: None,
            curve: None,
            simulate: None,
            duality: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config: cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serialises")
    }

    /// Checks the fields used by `command`. Errors name the offending field path.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return invalid(format!("version: expected {CONFIG_VERSION}, got {}", self.version));
        }
        self.validate_family()?;
        match command {
            Command::DumpCoupling => {
                let c = self.coupling.as_ref().ok_or_else(|| missing("coupling"))?;
                finite("coupling.t", c.t)?;
                positive("coupling.eps", c.eps)?;
                if c.grid < 2 {
                    return invalid("coupling.grid: must be at least 2".into());
                }
                if c.kind == CouplingKind::Increasing && self.family.family != FamilyKind::Uniform {
                    return invalid("coupling.kind: the increasing coupling is available for the uniform family only".into());
                }
            }
            Command::TransitionCurve => {
                if let Some(c) = &self.curve {
                    if c.n_times < 2 {
                        return invalid("curve.n_times: must be at least 2".into());
                    }
                    for (i, &e) in c.eps_sweep.iter().enumerate() {
                        positive(&format!("curve.eps_sweep[{i}]"), e)?;
                    }
                }
            }
            Command::Simulate => {
                let s = self.simulate.as_ref().ok_or_else(|| missing("simulate"))?;
                if s.n_paths == 0 {
                    return invalid("simulate.n_paths: must be at least 1".into());
                }
                step("simulate.dt", s.dt)?;
                match s.scheme {
                    SchemeName::Discrete => match s.n {
                        None => return invalid("simulate.n: required for the discrete scheme".into()),
                        Some(0) => return invalid("simulate.n: must be at least 1".into()),
                        _ => {}
                    },
                    SchemeName::Increasing if self.family.family != FamilyKind::Uniform => {
                        return invalid("simulate.scheme: the increasing scheme is available for the uniform family only".into());
                    }
                    _ => {}
                }
                if let Some(times) = &s.sample_times {
                    for (i, &t) in times.iter().enumerate() {
                        finite(&format!("simulate.sample_times[{i}]"), t)?;
                    }
                }
                if let Some(d) = s.dense_dt {
                    step("simulate.dense_dt", d)?;
                    if s.scheme == SchemeName::Increasing {
                        return invalid("simulate.dense_dt: dense dumps are not available for the increasing scheme".into());
                    }
                }
                if let Some(k) = s.ks_threshold {
                    positive("simulate.ks_threshold", k)?;
                }
            }
            Command::DualityGap => {
                let d = self.duality.as_ref().ok_or_else(|| missing("duality"))?;
                if d.n_paths == 0 {
                    return invalid("duality.n_paths: must be at least 1".into());
                }
                step("duality.dt", d.dt)?;
                if let Some(t) = d.tol_hedge {
                    positive("duality.tol_hedge", t)?;
                }
                positive("duality.gap_tolerance", d.gap_tolerance)?;
                if !(0.0..=1.0).contains(&d.max_violation_fraction) {
                    return invalid(format!(
                        "duality.max_violation_fraction: must lie in [0, 1], got {}",
                        d.max_violation_fraction
                    ));
                }
                if d.chain_n == Some(0) {
                    return invalid("duality.chain_n: must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    fn validate_family(&self) -> Result<(), CliError> {
        let f = &self.family;
        if let Some(d) = f.delta {
            if !(d > 0.0 && d < 1.0) {
                return invalid(format!("family.delta: must lie in (0, 1), got {d}"));
            }
            if matches!(f.family, FamilyKind::Uniform | FamilyKind::Tabulated) {
                return invalid("family.delta: only the bachelier and gbm families take a delta".into());
            }
        }
        match (f.family, &f.table_path) {
            (FamilyKind::Tabulated, None) => invalid("family.table_path: required for a tabulated family".into()),
            (FamilyKind::Tabulated, Some(_)) => Ok(()),
            (_, Some(_)) => invalid("family.table_path: only a tabulated family takes a table".into()),
            _ => Ok(()),
        }
    }
}

fn invalid<T>(msg: String) -> Result<T, CliError> {
    Err(CliError::Validation(msg))
}

fn missing(block: &str) -> CliError {
    CliError::Validation(format!("{block}: block is required for this command"))
}

fn finite(path: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{path}: must be finite, got {v}"))
    }
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{path}: must be positive, got {v}"))
    }
}

fn step(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v <= 0.1 {
        Ok(())
    } else {
        invalid(format!("{path}: must lie in (0, 0.1], got {v}"))
    }
}
