//! Run configuration: a JSON file mirroring the parameter types, merged
//! with command-line overrides and filled with defaults.
//!
//! Precedence is command line, then file, then defaults. The fully
//! resolved configuration serialises back to a file that resolves to
//! itself, and a run manifest is accepted wherever a config file is.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::discriminate::DEFAULT_THRESHOLD;
use crate::error::{EtmError, Result, ValidationReport};
use crate::hom::MODE_CUT;
use crate::params::{dimensionless_time, ChiModel, ControlParams, GridSpec, PhysicalSetup};
use crate::schmidt::ConvergeOptions;
use crate::sweep::{AxisSpec, SweepPlan};

pub const DEFAULT_T_I: f64 = 1e-3;
pub const DEFAULT_SIGMA_E: f64 = 1.0;

/// `start:stop:count` sampling of the path difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl DeltaRange {
    pub fn parse(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:count, got {text:?}"));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
        Ok(Self {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            count: parts[2]
                .trim()
                .parse()
                .map_err(|e| format!("{:?}: {e}", parts[2]))?,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        crate::hom::linspace(self.start, self.stop, self.count)
    }

    fn validate(&self, r: &mut ValidationReport) {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            r.push("hom.delta_range", "bounds must be finite");
        }
        if self.count < 2 {
            r.push(
                "hom.delta_range",
                format!("needs at least 2 samples, got {}", self.count),
            );
        }
        if self.start >= self.stop {
            r.push("hom.delta_range", "start must be below stop");
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomSettings {
    /// Explicit scan; when absent the range follows the spectrum.
    #[serde(default)]
    pub delta_range: Option<DeltaRange>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_mode_cut")]
    pub mode_cut: f64,
}

fn default_samples() -> usize {
    401
}
fn default_mode_cut() -> f64 {
    MODE_CUT
}

impl Default for HomSettings {
    fn default() -> Self {
        Self {
            delta_range: None,
            samples: default_samples(),
            mode_cut: default_mode_cut(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscriminateSettings {
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_modes() -> usize {
    3
}
fn default_shots() -> u64 {
    10_000
}
fn default_seed() -> u64 {
    7
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl Default for DiscriminateSettings {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            shots: default_shots(),
            seed: default_seed(),
            threshold: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    #[serde(rename = "T_I_axis", default = "default_t_axis")]
    pub t_axis: AxisSpec,
    #[serde(default = "default_sigma_axis")]
    pub sigma_e_axis: AxisSpec,
    #[serde(default)]
    pub path: Option<Vec<(f64, f64)>>,
}

fn default_t_axis() -> AxisSpec {
    SweepPlan::default_heatmap(8).t_axis
}
fn default_sigma_axis() -> AxisSpec {
    SweepPlan::default_heatmap(8).sigma_e_axis
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            t_axis: default_t_axis(),
            sigma_e_axis: default_sigma_axis(),
            path: None,
        }
    }
}

/// Configuration file contents; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "T_I", default, skip_serializing_if = "Option::is_none")]
    pub t_i: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_e: Option<f64>,
    /// Physical parameters from which `T_I` is derived when not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup: Option<PhysicalSetup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<ChiModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergeOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hom: Option<HomSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discriminate: Option<DiscriminateSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSettings>,
}

impl RunConfig {
    /// Parses a config file body. A run manifest contributes its echoed
    /// `config` object.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
        let value = match value {
            Value::Object(mut map) if map.contains_key("manifest_version") => {
                match map.remove("config") {
                    Some(Value::Null) | None => {
                        return Err(EtmError::Config(
                            "manifest carries no resolved config".into(),
                        ))
                    }
                    Some(cfg) => cfg,
                }
            }
            Value::Null => Value::Object(Default::default()),
            other => other,
        };
        serde_json::from_value(value).map_err(|e| parse_error(&e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| EtmError::io(path, e))?;
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        Self::from_json(&text)
    }
}

fn parse_error(e: &serde_json::Error) -> EtmError {
    let mut r = ValidationReport::default();
    let msg = e.to_string();
    let field = msg
        .split('`')
        .nth(1)
        .filter(|_| msg.starts_with("unknown field"))
        .unwrap_or("config");
    r.push(field, msg.clone());
    EtmError::Validation(r)
}

/// Values given on the command line; `None` leaves the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub t_i: Option<f64>,
    pub sigma_e: Option<f64>,
    pub delta_range: Option<DeltaRange>,
    pub modes: Option<usize>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub resolution: Option<usize>,
}

/// Every knob of a run with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    #[serde(rename = "T_I")]
    pub t_i: f64,
    pub sigma_e: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup: Option<PhysicalSetup>,
    pub chi: ChiModel,
    pub grid: GridSpec,
    pub convergence: ConvergeOptions,
    pub hom: HomSettings,
    pub discriminate: DiscriminateSettings,
    pub sweep: SweepSettings,
}

impl ResolvedConfig {
    pub fn control(&self) -> ControlParams {
        ControlParams {
            t_i: self.t_i,
            sigma_e: self.sigma_e,
            chi: self.chi,
            grid: self.grid,
        }
    }

    pub fn sweep_plan(&self, jobs: usize) -> SweepPlan {
        SweepPlan {
            t_axis: self.sweep.t_axis.clone(),
            sigma_e_axis: self.sweep.sigma_e_axis.clone(),
            path: self.sweep.path.clone(),
            base: self.control(),
            convergence: self.convergence,
            jobs,
        }
    }

    pub fn deltas(&self) -> Option<Vec<f64>> {
        self.hom.delta_range.map(|r| r.values())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = self.control().validate();
        r.merge(self.convergence.validate());
        if let Some(range) = &self.hom.delta_range {
            range.validate(&mut r);
        }
        if self.hom.samples < 2 {
            r.push("hom.samples", "must be at least 2");
        }
        if !(self.hom.mode_cut.is_finite() && (0.0..1.0).contains(&self.hom.mode_cut)) {
            r.push(
                "hom.mode_cut",
                format!("must lie in [0, 1), got {}", self.hom.mode_cut),
            );
        }
        let d = &self.discriminate;
        if d.modes == 0 {
            r.push("discriminate.modes", "must be at least 1");
        }
        if d.shots == 0 {
            r.push("discriminate.shots", "must be at least 1");
        }
        if !(d.threshold.is_finite() && d.threshold > 0.0 && d.threshold < 0.5) {
            r.push(
                "discriminate.threshold",
                format!("must lie in (0, 1/2), got {}", d.threshold),
            );
        }
        let mut plan = self.sweep_plan(1);
        plan.base = ControlParams::new(DEFAULT_T_I, DEFAULT_SIGMA_E)
            .with_chi(self.chi)
            .with_grid(self.grid);
        for e in plan.validate().errors {
            if !r.mentions(&e.field) {
                r.errors.push(e);
            }
        }
        r
    }
}

/// Merges command line, file and defaults, then validates everything at
/// once so that a single report names every offending field.
pub fn parse_and_validate(file: Option<&Path>, overrides: &Overrides) -> Result<ResolvedConfig> {
    let cfg = match file {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    resolve(cfg, overrides)
}

pub fn resolve(cfg: RunConfig, o: &Overrides) -> Result<ResolvedConfig> {
    let mut report = ValidationReport::default();
    let derived = match (&cfg.setup, o.t_i.or(cfg.t_i)) {
        (Some(setup), None) => match dimensionless_time(setup) {
            Ok(t) => Some(t),
            Err(EtmError::Validation(r)) => {
                for e in r.errors {
                    report.push(format!("setup.{}", e.field), e.reason);
                }
                None
            }
            Err(e) => return Err(e),
        },
        (Some(setup), Some(_)) => {
            for e in setup.validate().errors {
                report.push(format!("setup.{}", e.field), e.reason);
            }
            None
        }
        _ => None,
    };
    let mut hom = cfg.hom.unwrap_or_default();
    if o.delta_range.is_some() {
        hom.delta_range = o.delta_range;
    }
    let mut disc = cfg.discriminate.unwrap_or_default();
    disc.modes = o.modes.unwrap_or(disc.modes);
    disc.shots = o.shots.unwrap_or(disc.shots);
    disc.seed = o.seed.unwrap_or(disc.seed);
    disc.threshold = o.threshold.unwrap_or(disc.threshold);
    let mut sweep = cfg.sweep.unwrap_or_default();
    if let Some(n) = o.resolution {
        sweep.t_axis.count = n;
        sweep.sigma_e_axis.count = n;
    }
    let resolved = ResolvedConfig {
        t_i: o.t_i.or(cfg.t_i).or(derived).unwrap_or(DEFAULT_T_I),
        sigma_e: o.sigma_e.or(cfg.sigma_e).unwrap_or(DEFAULT_SIGMA_E),
        setup: cfg.setup,
        chi: cfg.chi.unwrap_or_default(),
        grid: cfg.grid.unwrap_or_default(),
        convergence: cfg.convergence.unwrap_or_default(),
        hom,
        discriminate: disc,
        sweep,
    };
    report.merge(resolved.validate());
    report.into_result()?;
    Ok(resolved)
}
