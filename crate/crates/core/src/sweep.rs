//! Parameter sweeps over `(T_I, σ_e)`: heatmaps, path cuts, and HOM scan
//! families, with an append-only checkpoint log for resuming.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EtmError, Result, ValidationReport};
use crate::hom::{peak_width_vs_kappa, WidthRow};
use crate::io::fmt_f64;
use crate::params::ControlParams;
use crate::schmidt::{converge_spectrum, ConvergeOptions, SchmidtSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl AxisSpec {
    pub fn log(start: f64, stop: f64, count: usize) -> Self {
        Self {
            start,
            stop,
            count,
            spacing: Spacing::Log,
        }
    }

    pub fn linear(start: f64, stop: f64, count: usize) -> Self {
        Self {
            start,
            stop,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * t,
                    Spacing::Log => {
                        let (a, b) = (self.start.ln(), self.stop.ln());
                        (a + (b - a) * t).exp()
                    }
                }
            })
            .collect()
    }

    fn validate(&self, name: &str) -> ValidationReport {
        let mut r = ValidationReport::default();
        if self.count == 0 {
            r.push(format!("{name}.count"), "must be at least 1");
        }
        for (field, v) in [("start", self.start), ("stop", self.stop)] {
            if !(v.is_finite() && v > 0.0) {
                r.push(
                    format!("{name}.{field}"),
                    format!("must be positive, got {v}"),
                );
            }
        }
        r
    }
}

/// What to sweep and how each point is solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    #[serde(rename = "T_I_axis")]
    pub t_axis: AxisSpec,
    pub sigma_e_axis: AxisSpec,
    /// Explicit `(T_I, σ_e)` points for path cuts.
    #[serde(default)]
    pub path: Option<Vec<(f64, f64)>>,
    /// Coupling model and grid policy shared by every point.
    pub base: ControlParams,
    #[serde(default)]
    pub convergence: ConvergeOptions,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_jobs() -> usize {
    1
}

impl SweepPlan {
    /// Heatmap axes bracketing every labelled regime: `T_I ∈ [1e-5, 1e-2]`
    /// and `σ_e ∈ [1/20, 2]`, both log-spaced.
    pub fn default_heatmap(resolution: usize) -> Self {
        Self {
            t_axis: AxisSpec::log(1e-5, 1e-2, resolution),
            sigma_e_axis: AxisSpec::log(0.05, 2.0, resolution),
            path: None,
            base: ControlParams::new(1e-3, 1.0),
            convergence: ConvergeOptions::default(),
            jobs: 1,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = self.t_axis.validate("T_I_axis");
        r.merge(self.sigma_e_axis.validate("sigma_e_axis"));
        r.merge(self.base.validate());
        r.merge(self.convergence.validate());
        if self.jobs == 0 {
            r.push("jobs", "must be at least 1");
        }
        if let Some(path) = &self.path {
            if path.is_empty() {
                r.push("path", "must contain at least one point");
            }
            for (i, &(t, s)) in path.iter().enumerate() {
                r.merge(self.point(t, s).validate().prefixed(&format!("path[{i}].")));
            }
        }
        r
    }

    pub fn point(&self, t_i: f64, sigma_e: f64) -> ControlParams {
        ControlParams {
            t_i,
            sigma_e,
            ..self.base
        }
    }

    /// Grid points in row-major `(T_I outer, σ_e inner)` order.
    pub fn heatmap_points(&self) -> Vec<(f64, f64)> {
        let sig = self.sigma_e_axis.values();
        self.t_axis
            .values()
            .into_iter()
            .flat_map(|t| sig.iter().map(move |&s| (t, s)))
            .collect()
    }

    /// Identity of everything except the sampled points; checkpoints are
    /// only reused under the same fingerprint.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(&(&self.base, &self.convergence)).expect("plan serialises")
    }
}

impl ValidationReport {
    fn prefixed(mut self, prefix: &str) -> Self {
        for e in &mut self.errors {
            e.field = format!("{prefix}{}", e.field);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T_I")]
    pub t_i: f64,
    pub sigma_e: f64,
    pub h2: f64,
    pub kappa: f64,
    pub converged: bool,
    pub n_points: usize,
    pub error: Option<String>,
}

impl SweepRow {
    fn from_result(t_i: f64, sigma_e: f64, res: &Result<SchmidtSpectrum>) -> Self {
        match res {
            Ok(s) => Self {
                t_i,
                sigma_e,
                h2: s.h2,
                kappa: s.kappa,
                converged: s.converged(),
                n_points: s.grid.n,
                error: None,
            },
            Err(e) => Self {
                t_i,
                sigma_e,
                h2: f64::NAN,
                kappa: f64::NAN,
                converged: false,
                n_points: 0,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutRow {
    pub index: usize,
    #[serde(flatten)]
    pub row: SweepRow,
}

fn key(t_i: f64, sigma_e: f64) -> (String, String) {
    (fmt_f64(t_i), fmt_f64(sigma_e))
}

const CHECKPOINT_MAGIC: &str = "# etmsim checkpoint v1 ";

/// Append-only log of finished points keyed by their exact input strings.
struct Checkpoint {
    done: HashMap<(String, String), SweepRow>,
    file: Option<Mutex<fs::File>>,
}

impl Checkpoint {
    fn open(path: Option<&Path>, fingerprint: &str) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self {
                done: HashMap::new(),
                file: None,
            });
        };
        let mut done = HashMap::new();
        let header = format!("{CHECKPOINT_MAGIC}{fingerprint}");
        let fresh = !path.exists();
        if !fresh {
            let text = fs::read_to_string(path).map_err(|e| EtmError::io(path, e))?;
            let mut lines = text.lines();
            if lines.next() != Some(header.as_str()) {
                return Err(EtmError::Config(format!(
                    "checkpoint {} was written for a different configuration",
                    path.display()
                )));
            }
            for line in lines {
                // a torn final line from an interrupted write is ignored
                if let Some(row) = parse_checkpoint_line(line) {
                    done.insert(key(row.t_i, row.sigma_e), row);
                }
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| EtmError::io(path, e))?;
        if fresh {
            writeln!(file, "{header}").map_err(|e| EtmError::io(path, e))?;
        }
        Ok(Self {
            done,
            file: Some(Mutex::new(file)),
        })
    }

    fn record(&self, row: &SweepRow) {
        if row.error.is_some() {
            return;
        }
        if let Some(file) = &self.file {
            let (t, s) = key(row.t_i, row.sigma_e);
            let line = format!(
                "{t},{s},{},{},{},{}\n",
                fmt_f64(row.h2),
                fmt_f64(row.kappa),
                row.converged,
                row.n_points
            );
            let mut f = file.lock().expect("checkpoint lock");
            if let Err(e) = f.write_all(line.as_bytes()).and_then(|_| f.flush()) {
                log::warn!("checkpoint append failed: {e}");
            }
        }
    }
}

fn parse_checkpoint_line(line: &str) -> Option<SweepRow> {
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != 6 {
        return None;
    }
    Some(SweepRow {
        t_i: parts[0].parse().ok()?,
        sigma_e: parts[1].parse().ok()?,
        h2: parts[2].parse().ok()?,
        kappa: parts[3].parse().ok()?,
        converged: parts[4].parse().ok()?,
        n_points: parts[5].parse().ok()?,
        error: None,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| EtmError::Config(format!("cannot start worker pool: {e}")))
}

fn evaluate(
    plan: &SweepPlan,
    points: &[(f64, f64)],
    checkpoint: Option<&Path>,
) -> Result<Vec<SweepRow>> {
    plan.validate().into_result()?;
    let log = Checkpoint::open(checkpoint, &plan.fingerprint())?;
    let pool = pool(plan.jobs)?;
    let rows = pool.install(|| {
        points
            .par_iter()
            .map(|&(t, s)| {
                if let Some(row) = log.done.get(&key(t, s)) {
                    return row.clone();
                }
                let res = converge_spectrum(&plan.point(t, s), &plan.convergence);
                let row = SweepRow::from_result(t, s, &res);
                log.record(&row);
                row
            })
            .collect()
    });
    Ok(rows)
}

/// One row per heatmap point, in axis order regardless of scheduling.
/// Failed points are recorded in their row and never abort the sweep.
pub fn run_heatmap(plan: &SweepPlan, checkpoint: Option<&Path>) -> Result<Vec<SweepRow>> {
    evaluate(plan, &plan.heatmap_points(), checkpoint)
}

/// Schmidt number along the plan's explicit path.
pub fn run_path_cut(plan: &SweepPlan, checkpoint: Option<&Path>) -> Result<Vec<CutRow>> {
    let path = plan
        .path
        .as_ref()
        .filter(|p| !p.is_empty())
        .ok_or_else(|| EtmError::Config("path cut needs a non-empty path".into()))?;
    let rows = evaluate(plan, path, checkpoint)?;
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(index, row)| CutRow { index, row })
        .collect())
}

/// Converged spectra for arbitrary points, in input order.
pub fn run_spectra(
    plan: &SweepPlan,
    points: &[(f64, f64)],
) -> Result<Vec<Result<SchmidtSpectrum>>> {
    plan.validate().into_result()?;
    let pool = pool(plan.jobs)?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|&(t, s)| converge_spectrum(&plan.point(t, s), &plan.convergence))
            .collect()
    }))
}

pub type SpectrumFamily = Vec<(ControlParams, SchmidtSpectrum)>;

/// Spectra and the HOM width table along the plan's path.
pub fn run_scan_family(
    plan: &SweepPlan,
    deltas: Option<&[f64]>,
) -> Result<(SpectrumFamily, Vec<WidthRow>)> {
    let path = plan
        .path
        .clone()
        .ok_or_else(|| EtmError::Config("scan family needs a path".into()))?;
    let spectra = run_spectra(plan, &path)?
        .into_iter()
        .zip(&path)
        .map(|(s, &(t, sig))| s.map(|s| (plan.point(t, sig), s)))
        .collect::<Result<Vec<_>>>()?;
    let widths = peak_width_vs_kappa(&spectra, deltas)?;
    Ok((spectra, widths))
}

pub fn heatmap_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("T_I,sigma_e,H2,kappa,converged\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.t_i),
            fmt_f64(r.sigma_e),
            fmt_f64(r.h2),
            fmt_f64(r.kappa),
            r.converged
        );
    }
    out
}

pub fn cut_csv(rows: &[CutRow]) -> String {
    let mut out = String::from("index,T_I,sigma_e,kappa\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.index,
            fmt_f64(r.row.t_i),
            fmt_f64(r.row.sigma_e),
            fmt_f64(r.row.kappa)
        );
    }
    out
}
