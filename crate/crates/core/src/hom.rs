//! Fermionic Hong-Ou-Mandel coincidence probability of an ETM pair.
//!
//! For balanced beam splitters the coincidence probability is
//! `P12(δ) = 1/2 + 1/2 Σ_nm √(p_n p_m) |I_nm(δ)|²` with the overlap
//! `I_nm(δ) = Σ_k φ_n*(k) φ_m(k) e^{-i 2π k δ} Δk`, where `δ = δl/λ_p`. The
//! nonrecoil dispersion makes the exponent linear in `k`; the constant
//! `k0` part is a global phase that drops out of `|I_nm|²`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EtmError, Result};
use crate::params::ControlParams;
use crate::schmidt::SchmidtSpectrum;

/// Modes at or below this probability are left out of the double sum.
pub const MODE_CUT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceScan {
    pub deltas: Vec<f64>,
    pub p12: Vec<f64>,
    /// Full width at half of `(peak - 1/2)`; `None` when the scan range
    /// does not bracket both half-level crossings.
    pub fwhm: Option<f64>,
    pub baseline: f64,
    pub peak: f64,
    /// Probability carried by modes dropped from the double sum.
    pub truncated_weight: f64,
    pub kappa: f64,
    pub source: String,
}

fn check_index(spec: &SchmidtSpectrum, idx: usize) -> Result<()> {
    if idx >= spec.len() {
        Err(EtmError::Domain(format!(
            "mode index {idx} out of range (spectrum has {} modes)",
            spec.len()
        )))
    } else {
        Ok(())
    }
}

/// `e^{-i 2π k δ} Δk` on the spectrum grid.
fn phase_weights(spec: &SchmidtSpectrum, delta: f64) -> Vec<Complex64> {
    let dk = spec.grid.spacing;
    spec.grid
        .points()
        .iter()
        .map(|&k| Complex64::from_polar(dk, -2.0 * PI * k * delta))
        .collect()
}

pub fn overlap_integral(
    spec: &SchmidtSpectrum,
    n: usize,
    m: usize,
    delta: f64,
) -> Result<Complex64> {
    check_index(spec, n)?;
    check_index(spec, m)?;
    let w = phase_weights(spec, delta);
    let (a, b) = (spec.modes_phi.column(n), spec.modes_phi.column(m));
    Ok(a.iter()
        .zip(b.iter())
        .zip(&w)
        .map(|((x, y), w)| x.conj() * y * w)
        .sum())
}

/// Coincidence scan with the default mode cut.
pub fn coincidence_scan(spec: &SchmidtSpectrum, deltas: &[f64]) -> Result<CoincidenceScan> {
    coincidence_scan_with(spec, deltas, MODE_CUT)
}

/// Coincidence scan keeping modes with `p_n > mode_cut`. The kept weights
/// are renormalised to sum to one and the dropped weight is reported.
pub fn coincidence_scan_with(
    spec: &SchmidtSpectrum,
    deltas: &[f64],
    mode_cut: f64,
) -> Result<CoincidenceScan> {
    if deltas.is_empty() {
        return Err(EtmError::Domain("empty path-difference list".into()));
    }
    if let Some(d) = deltas.iter().find(|d| !d.is_finite()) {
        return Err(EtmError::Domain(format!("non-finite path difference {d}")));
    }
    let kept: Vec<usize> = (0..spec.len())
        .filter(|&n| spec.probs[n] > mode_cut)
        .collect();
    if kept.is_empty() {
        return Err(EtmError::Domain(format!(
            "no mode above the cut {mode_cut}"
        )));
    }
    let kept_weight: f64 = kept.iter().map(|&n| spec.probs[n]).sum();
    let total: f64 = spec.probs.iter().sum();
    let amps: Vec<f64> = kept
        .iter()
        .map(|&n| (spec.probs[n] / kept_weight).sqrt())
        .collect();
    let phi = DMatrix::from_fn(spec.grid.n, kept.len(), |r, c| spec.modes_phi[(r, kept[c])]);
    let phi_adj = phi.adjoint();

    let p12: Vec<f64> = deltas
        .par_iter()
        .map(|&delta| {
            let w = phase_weights(spec, delta);
            let weighted = DMatrix::from_fn(phi.nrows(), phi.ncols(), |r, c| phi[(r, c)] * w[r]);
            let overlaps = &phi_adj * weighted;
            let mut acc = 0.0;
            for (n, an) in amps.iter().enumerate() {
                for (m, am) in amps.iter().enumerate() {
                    acc += an * am * overlaps[(n, m)].norm_sqr();
                }
            }
            0.5 + 0.5 * acc
        })
        .collect();

    let (baseline, peak, fwhm) = summarize(deltas, &p12);
    Ok(CoincidenceScan {
        deltas: deltas.to_vec(),
        p12,
        fwhm,
        baseline,
        peak,
        truncated_weight: (total - kept_weight).max(0.0),
        kappa: spec.kappa,
        source: describe(spec),
    })
}

pub(crate) fn describe(spec: &SchmidtSpectrum) -> String {
    match &spec.params {
        Some(p) => format!(
            "T_I={:e} sigma_e={} n_points={} method={:?}",
            p.t_i, p.sigma_e, spec.grid.n, spec.method
        ),
        None => format!(
            "custom amplitude n_points={} method={:?}",
            spec.grid.n, spec.method
        ),
    }
}

/// `(baseline, peak, fwhm)` of a sampled peak over the 1/2 floor.
pub fn summarize(deltas: &[f64], p12: &[f64]) -> (f64, f64, Option<f64>) {
    let mut by_distance: Vec<usize> = (0..deltas.len()).collect();
    by_distance.sort_by(|&a, &b| deltas[b].abs().total_cmp(&deltas[a].abs()).then(a.cmp(&b)));
    let tail = (deltas.len() / 10).max(1);
    let baseline = by_distance[..tail].iter().map(|&i| p12[i]).sum::<f64>() / tail as f64;

    let (imax, &peak) = p12
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("non-empty scan");
    let half = 0.5 + 0.5 * (peak - 0.5);
    let crossing = |i: usize, j: usize| {
        // linear interpolation between samples i (above) and j (below)
        let t = (p12[i] - half) / (p12[i] - p12[j]);
        deltas[i] + t * (deltas[j] - deltas[i])
    };
    let left = (0..imax)
        .rev()
        .find(|&i| p12[i] < half)
        .map(|i| crossing(i + 1, i));
    let right = (imax + 1..p12.len())
        .find(|&i| p12[i] < half)
        .map(|i| crossing(i - 1, i));
    let fwhm = match (left, right) {
        (Some(l), Some(r)) if peak > 0.5 => Some(r - l),
        _ => None,
    };
    (baseline, peak, fwhm)
}

pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Standard deviation of the electron-2 momentum density `Σ p_n |φ_n|²`.
pub fn marginal_momentum_std(spec: &SchmidtSpectrum) -> f64 {
    let k = spec.grid.points();
    let dk = spec.grid.spacing;
    let mut density = vec![0.0; k.len()];
    for (n, &p) in spec.probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        for (r, d) in density.iter_mut().enumerate() {
            *d += p * spec.modes_phi[(r, n)].norm_sqr();
        }
    }
    let m0: f64 = density.iter().sum::<f64>() * dk;
    let m1: f64 = density.iter().zip(k).map(|(d, k)| d * k).sum::<f64>() * dk / m0;
    let m2: f64 = density.iter().zip(k).map(|(d, k)| d * k * k).sum::<f64>() * dk / m0;
    (m2 - m1 * m1).max(0.0).sqrt()
}

/// HOM width of a single Gaussian mode with momentum std `sigma`.
pub fn gaussian_reference_fwhm(sigma: f64) -> f64 {
    2.0 * 2f64.ln().sqrt() / (2.0 * PI * sigma)
}

/// Path differences beyond this are aliased: the overlaps are periodic in
/// `δ` with period `1/Δk` on a uniform grid.
pub fn alias_free_range(spec: &SchmidtSpectrum) -> f64 {
    0.5 / spec.grid.spacing
}

/// Expected scale of the coincidence peak: the Gaussian reference width
/// for the narrower of the marginal momentum spread and the
/// single-electron bandwidth.
pub fn reference_width(spec: &SchmidtSpectrum) -> f64 {
    let marginal = marginal_momentum_std(spec);
    let sigma = spec.params.map_or(marginal, |p| p.sigma_e.min(marginal));
    gaussian_reference_fwhm(sigma)
}

/// Symmetric scan over five reference peak widths on each side.
pub fn default_deltas(spec: &SchmidtSpectrum, samples: usize) -> Vec<f64> {
    let span = (5.0 * reference_width(spec)).min(0.9 * alias_free_range(spec));
    linspace(-span, span, samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    #[serde(rename = "T_I")]
    pub t_i: f64,
    pub sigma_e: f64,
    pub kappa: f64,
    pub fwhm: Option<f64>,
}

/// `(κ, fwhm)` for a family of spectra, sorted by κ. Without explicit
/// `deltas` every member is scanned over the range of the narrowest one
/// (widest momentum spread) widened to cover all peaks.
pub fn peak_width_vs_kappa(
    sweep: &[(ControlParams, SchmidtSpectrum)],
    deltas: Option<&[f64]>,
) -> Result<Vec<WidthRow>> {
    if sweep.len() < 2 {
        return Err(EtmError::Domain(
            "peak-width table needs at least two spectra".into(),
        ));
    }
    let owned;
    let deltas = match deltas {
        Some(d) => d,
        None => {
            let widest = sweep
                .iter()
                .map(|(_, s)| reference_width(s))
                .fold(0.0, f64::max);
            let alias = sweep
                .iter()
                .map(|(_, s)| alias_free_range(s))
                .fold(f64::INFINITY, f64::min);
            let span = (5.0 * widest).min(0.9 * alias);
            owned = linspace(-span, span, 801);
            &owned
        }
    };
    let mut rows = sweep
        .iter()
        .map(|(p, s)| {
            let scan = coincidence_scan(s, deltas)?;
            Ok(WidthRow {
                t_i: p.t_i,
                sigma_e: p.sigma_e,
                kappa: s.kappa,
                fwhm: scan.fwhm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
    Ok(rows)
}
