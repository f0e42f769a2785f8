//! CSV and structured-record output.
//!
//! Every float is written with 17 significant digits so that values survive
//! a text round trip exactly. Each CSV starts with a single header line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::amplitude::PairAmplitude;
use crate::error::{EtmError, Result};
use crate::hom::CoincidenceScan;
use crate::schmidt::SchmidtSpectrum;

/// Lossless text form of an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| EtmError::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| EtmError::io(path, e))
}

/// Pretty JSON with a trailing newline; field order follows the type.
pub fn to_record<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialise");
    s.push('\n');
    s
}

pub fn amplitude_csv(amp: &PairAmplitude) -> String {
    let k = amp.grid.points();
    let mut out = String::with_capacity(amp.grid.n * amp.grid.n * 100);
    out.push_str("k1,k2,re,im\n");
    for (i, &k1) in k.iter().enumerate() {
        for (j, &k2) in k.iter().enumerate() {
            let z = amp.values[(i, j)];
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(k1),
                fmt_f64(k2),
                fmt_f64(z.re),
                fmt_f64(z.im)
            );
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeMetadata<'a> {
    pub params: Option<&'a crate::params::ControlParams>,
    pub norm_constant: f64,
    pub n_points: usize,
    pub half_window: f64,
    pub spacing: f64,
}

pub fn amplitude_metadata(amp: &PairAmplitude) -> AmplitudeMetadata<'_> {
    AmplitudeMetadata {
        params: amp.params.as_ref(),
        norm_constant: amp.norm_constant,
        n_points: amp.grid.n,
        half_window: amp.grid.half_window,
        spacing: amp.grid.spacing,
    }
}

pub fn spectrum_csv(spec: &SchmidtSpectrum) -> String {
    let mut out = String::from("n,p_n\n");
    for (n, p) in spec.probs.iter().enumerate() {
        let _ = writeln!(out, "{n},{}", fmt_f64(*p));
    }
    out
}

/// Mode table with real and imaginary parts of the first `modes` pairs.
pub fn modes_csv(spec: &SchmidtSpectrum, modes: usize) -> String {
    let m = modes.min(spec.len());
    let mut out = String::from("k");
    for family in ["psi", "phi"] {
        for n in 0..m {
            let _ = write!(out, ",{family}_{n}_re,{family}_{n}_im");
        }
    }
    out.push('\n');
    for (r, &k) in spec.grid.points().iter().enumerate() {
        out.push_str(&fmt_f64(k));
        for family in [&spec.modes_psi, &spec.modes_phi] {
            for n in 0..m {
                let z = family[(r, n)];
                let _ = write!(out, ",{},{}", fmt_f64(z.re), fmt_f64(z.im));
            }
        }
        out.push('\n');
    }
    out
}

pub fn scan_csv(scan: &CoincidenceScan) -> String {
    let mut out = String::from("delta_over_lambda_p,p12\n");
    for (d, p) in scan.deltas.iter().zip(&scan.p12) {
        let _ = writeln!(out, "{},{}", fmt_f64(*d), fmt_f64(*p));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub kappa: f64,
    pub fwhm: Option<f64>,
    pub baseline: f64,
    pub peak: f64,
    pub truncated_weight: f64,
    pub source: String,
}

impl From<&CoincidenceScan> for ScanSummary {
    fn from(s: &CoincidenceScan) -> Self {
        Self {
            kappa: s.kappa,
            fwhm: s.fwhm,
            baseline: s.baseline,
            peak: s.peak,
            truncated_weight: s.truncated_weight,
            source: s.source.clone(),
        }
    }
}
