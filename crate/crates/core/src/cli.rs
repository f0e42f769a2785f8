//! Command-line front end: argument parsing, dispatch to the library, file
//! output and the run manifest.
//!
//! Every run writes `manifest.json` into the output directory, including
//! runs that fail validation or lose sweep points.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::amplitude::{amplitude_cross_section, build_amplitude, Axis, CrossSection};
use crate::config::{parse_and_validate, DeltaRange, Overrides, ResolvedConfig};
use crate::discriminate::{probe_coincidence, run_tomography, ProbeMode};
use crate::error::{EtmError, Result};
use crate::hom::{coincidence_scan_with, default_deltas};
use crate::io::{
    amplitude_csv, amplitude_metadata, fmt_f64, modes_csv, scan_csv, spectrum_csv, to_record,
    write_text, ScanSummary,
};
use crate::schmidt::{converge_spectrum, ConvergenceReport, SchmidtSpectrum};
use crate::sweep::{cut_csv, heatmap_csv, run_heatmap, run_path_cut, SweepRow};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.log";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "etmsim",
    version,
    about = "Electron-pair temporal-mode simulator"
)]
pub struct Cli {
    /// JSON config file (a previous run manifest also works).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long = "T-I", global = true, allow_hyphen_values = true)]
    pub t_i: Option<f64>,
    #[arg(long = "sigma-e", global = true, allow_hyphen_values = true)]
    pub sigma_e: Option<f64>,
    /// Resolve and validate the configuration without computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Worker threads.
    #[arg(long, global = true, env = "ETMSIM_JOBS", default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "etmsim-out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Heatmap,
    Cut,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pair amplitude on the configured grid.
    Amplitude,
    /// Converged Schmidt spectrum and leading modes.
    Schmidt {
        /// Number of modes written to modes.csv.
        #[arg(long, default_value_t = 5)]
        modes: usize,
    },
    /// Coincidence probability versus path difference.
    Hom {
        /// Scan as start:stop:count in units of the polariton wavelength.
        #[arg(long, value_parser = DeltaRange::parse, allow_hyphen_values = true)]
        delta_range: Option<DeltaRange>,
    },
    /// Probe-mode coincidence curves and mode-counting tomography.
    Discriminate {
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Schmidt number over a (T_I, sigma_e) heatmap or along a path.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        /// Points per heatmap axis.
        #[arg(long)]
        resolution: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Amplitude => "amplitude",
            Command::Schmidt { .. } => "schmidt",
            Command::Hom { .. } => "hom",
            Command::Discriminate { .. } => "discriminate",
            Command::Sweep {
                kind: SweepKind::Heatmap,
                ..
            } => "sweep heatmap",
            Command::Sweep {
                kind: SweepKind::Cut,
                ..
            } => "sweep cut",
        }
    }
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        let mut o = Overrides {
            t_i: self.t_i,
            sigma_e: self.sigma_e,
            ..Overrides::default()
        };
        match &self.command {
            Command::Hom { delta_range } => o.delta_range = *delta_range,
            Command::Discriminate {
                modes,
                shots,
                seed,
                threshold,
            } => {
                o.modes = *modes;
                o.shots = *shots;
                o.seed = *seed;
                o.threshold = *threshold;
            }
            Command::Sweep { resolution, .. } => o.resolution = *resolution,
            _ => {}
        }
        o
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    DryRun,
    ValidationError,
    NumericalError,
    Partial,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSummary {
    pub label: String,
    pub kappa: f64,
    #[serde(rename = "H2")]
    pub h2: f64,
    pub n_points: usize,
    pub report: Option<ConvergenceReport>,
}

impl ConvergenceSummary {
    fn of(label: impl Into<String>, spec: &SchmidtSpectrum) -> Self {
        Self {
            label: label.into(),
            kappa: spec.kappa,
            h2: spec.h2,
            n_points: spec.grid.n,
            report: spec.convergence.clone(),
        }
    }
}

/// Record of one invocation. `config` is the fully resolved configuration
/// and can be passed back through `--config`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub subcommand: String,
    pub status: Status,
    pub exit_code: i32,
    pub code_version: String,
    pub wall_time_s: f64,
    pub jobs: usize,
    pub config: Option<ResolvedConfig>,
    pub convergence: Vec<ConvergenceSummary>,
    pub outputs: Vec<String>,
    pub errors: Vec<String>,
}

struct Run<'a> {
    out: &'a Path,
    outputs: Vec<String>,
    convergence: Vec<ConvergenceSummary>,
    errors: Vec<String>,
    partial: bool,
}

impl Run<'_> {
    fn emit(&mut self, name: &str, text: &str) -> Result<()> {
        write_text(&self.out.join(name), text)?;
        self.outputs.push(name.to_string());
        Ok(())
    }
}

/// Parses `argv` (program name first), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => execute(&cli).exit_code,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn exit_code_for(err: &EtmError) -> i32 {
    match err {
        EtmError::Validation(_) | EtmError::Config(_) | EtmError::Io { .. } => EXIT_VALIDATION,
        EtmError::Numerical { .. } | EtmError::Domain(_) | EtmError::Contract(_) => EXIT_NUMERICAL,
    }
}

/// Runs a parsed command line and writes its manifest.
pub fn execute(cli: &Cli) -> RunManifest {
    let started = Instant::now();
    let mut run = Run {
        out: &cli.out,
        outputs: Vec::new(),
        convergence: Vec::new(),
        errors: Vec::new(),
        partial: false,
    };
    let resolved = parse_and_validate(cli.config.as_deref(), &cli.overrides());
    let (config, outcome) = match resolved {
        Err(e) => (None, Err(e)),
        Ok(cfg) if cli.dry_run => (Some(cfg), Ok(())),
        Ok(cfg) => {
            let outcome = if cli.jobs == 0 {
                Err(EtmError::Config("--jobs must be at least 1".into()))
            } else {
                dispatch(cli, &cfg, &mut run)
            };
            (Some(cfg), outcome)
        }
    };
    let (status, exit_code) = match &outcome {
        Err(e) => {
            run.errors.push(e.to_string());
            let code = exit_code_for(e);
            let status = if code == EXIT_VALIDATION {
                Status::ValidationError
            } else {
                Status::NumericalError
            };
            (status, code)
        }
        Ok(()) if cli.dry_run => (Status::DryRun, EXIT_OK),
        Ok(()) if run.partial => (Status::Partial, EXIT_PARTIAL),
        Ok(()) => (Status::Ok, EXIT_OK),
    };
    for e in &run.errors {
        eprintln!("etmsim: {e}");
    }
    let manifest = RunManifest {
        manifest_version: MANIFEST_VERSION,
        subcommand: cli.command.name().to_string(),
        status,
        exit_code,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: started.elapsed().as_secs_f64(),
        jobs: cli.jobs,
        config,
        convergence: run.convergence,
        outputs: run.outputs,
        errors: run.errors,
    };
    let text = to_record(&manifest);
    if cli.dry_run {
        print!("{text}");
    }
    if let Err(e) = write_text(&cli.out.join(MANIFEST_FILE), &text) {
        eprintln!("etmsim: {e}");
    }
    manifest
}

fn dispatch(cli: &Cli, cfg: &ResolvedConfig, run: &mut Run) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| EtmError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Amplitude => cmd_amplitude(cfg, run),
        Command::Schmidt { modes } => cmd_schmidt(cfg, *modes, run),
        Command::Hom { .. } => cmd_hom(cfg, run),
        Command::Discriminate { .. } => cmd_discriminate(cfg, run),
        Command::Sweep { kind, .. } => cmd_sweep(cfg, *kind, cli.jobs, run),
    })
}

fn cross_section_csv(cut: &CrossSection) -> String {
    let mut out = String::from("k1,abs_phi\n");
    for (x, v) in cut.coords.iter().zip(&cut.values) {
        let _ = writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*v));
    }
    out
}

fn cmd_amplitude(cfg: &ResolvedConfig, run: &mut Run) -> Result<()> {
    let amp = build_amplitude(&cfg.control())?;
    run.emit("amplitude.csv", &amplitude_csv(&amp))?;
    run.emit("amplitude.json", &to_record(&amplitude_metadata(&amp)))?;
    run.emit(
        "diagonal.csv",
        &cross_section_csv(&amplitude_cross_section(&amp, Axis::Diagonal)),
    )?;
    run.emit(
        "antidiagonal.csv",
        &cross_section_csv(&amplitude_cross_section(&amp, Axis::Antidiagonal)),
    )
}

fn solve(cfg: &ResolvedConfig, run: &mut Run) -> Result<SchmidtSpectrum> {
    let spec = converge_spectrum(&cfg.control(), &cfg.convergence)?;
    run.convergence
        .push(ConvergenceSummary::of("spectrum", &spec));
    Ok(spec)
}

#[derive(Serialize)]
struct SpectrumRecord<'a> {
    kappa: f64,
    #[serde(rename = "H2")]
    h2: f64,
    rank: usize,
    n_points: usize,
    method: crate::schmidt::Method,
    degenerate: &'a [(usize, usize)],
    convergence: &'a Option<ConvergenceReport>,
}

fn cmd_schmidt(cfg: &ResolvedConfig, modes: usize, run: &mut Run) -> Result<()> {
    let spec = solve(cfg, run)?;
    run.emit("spectrum.csv", &spectrum_csv(&spec))?;
    run.emit("modes.csv", &modes_csv(&spec, modes))?;
    let record = SpectrumRecord {
        kappa: spec.kappa,
        h2: spec.h2,
        rank: spec.rank(),
        n_points: spec.grid.n,
        method: spec.method,
        degenerate: &spec.degenerate,
        convergence: &spec.convergence,
    };
    run.emit("schmidt.json", &to_record(&record))
}

fn cmd_hom(cfg: &ResolvedConfig, run: &mut Run) -> Result<()> {
    let spec = solve(cfg, run)?;
    let deltas = cfg
        .deltas()
        .unwrap_or_else(|| default_deltas(&spec, cfg.hom.samples));
    let scan = coincidence_scan_with(&spec, &deltas, cfg.hom.mode_cut)?;
    run.emit("scan.csv", &scan_csv(&scan))?;
    run.emit("hom.json", &to_record(&ScanSummary::from(&scan)))
}

fn cmd_discriminate(cfg: &ResolvedConfig, run: &mut Run) -> Result<()> {
    let spec = solve(cfg, run)?;
    let d = &cfg.discriminate;
    if d.modes > spec.rank() {
        return Err(EtmError::Domain(format!(
            "requested {} probe modes but the spectrum has rank {}",
            d.modes,
            spec.rank()
        )));
    }
    let probes = (0..d.modes)
        .map(|n| ProbeMode::from_mode(&spec, n))
        .collect::<Result<Vec<_>>>()?;
    let deltas = cfg
        .deltas()
        .unwrap_or_else(|| default_deltas(&spec, cfg.hom.samples));
    for (j, probe) in probes.iter().enumerate() {
        let scans = (0..d.modes)
            .map(|n| probe_coincidence(&spec, n, probe, &deltas))
            .collect::<Result<Vec<_>>>()?;
        let mut csv = String::from("delta_over_lambda_p");
        for n in 0..d.modes {
            let _ = write!(csv, ",p12_phi_{n}");
        }
        csv.push('\n');
        for (i, delta) in deltas.iter().enumerate() {
            csv.push_str(&fmt_f64(*delta));
            for s in &scans {
                csv.push(',');
                csv.push_str(&fmt_f64(s.p12[i]));
            }
            csv.push('\n');
        }
        run.emit(&format!("probe_{j}.csv"), &csv)?;
    }
    let result = run_tomography(&spec, &probes, d.shots, d.seed, d.threshold)?;
    run.emit("tomography.json", &to_record(&result))
}

fn note_failures(rows: &[&SweepRow], run: &mut Run) {
    for r in rows {
        if let Some(e) = &r.error {
            run.partial = true;
            run.errors.push(format!(
                "T_I={} sigma_e={}: {e}",
                fmt_f64(r.t_i),
                fmt_f64(r.sigma_e)
            ));
        }
    }
}

fn cmd_sweep(cfg: &ResolvedConfig, kind: SweepKind, jobs: usize, run: &mut Run) -> Result<()> {
    let plan = cfg.sweep_plan(jobs);
    let checkpoint = run.out.join(CHECKPOINT_FILE);
    std::fs::create_dir_all(run.out).map_err(|e| EtmError::io(run.out, e))?;
    match kind {
        SweepKind::Heatmap => {
            let rows = run_heatmap(&plan, Some(&checkpoint))?;
            run.outputs.push(CHECKPOINT_FILE.into());
            note_failures(&rows.iter().collect::<Vec<_>>(), run);
            run.emit("heatmap.csv", &heatmap_csv(&rows))
        }
        SweepKind::Cut => {
            if plan.path.is_none() {
                let mut r = crate::error::ValidationReport::default();
                r.push("sweep.path", "a path cut needs sweep.path in the config");
                return Err(EtmError::Validation(r));
            }
            let rows = run_path_cut(&plan, Some(&checkpoint))?;
            run.outputs.push(CHECKPOINT_FILE.into());
            note_failures(&rows.iter().map(|r| &r.row).collect::<Vec<_>>(), run);
            run.emit("cut.csv", &cut_csv(&rows))
        }
    }
}
