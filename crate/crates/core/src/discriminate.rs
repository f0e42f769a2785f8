//! ETM discrimination by coincidence with a shaped probe, and mode-counting
//! tomography of the Schmidt probabilities.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EtmError, Result};
use crate::hom::{summarize, CoincidenceScan};
use crate::params::MomentumGrid;
use crate::schmidt::{SchmidtSpectrum, P_FLOOR};

/// Default margin of the matched-peak rule `P(0) > 1/2 + threshold`.
pub const DEFAULT_THRESHOLD: f64 = 0.25;

/// Shaped probe electron, unit-normalised on its grid.
#[derive(Debug, Clone)]
pub struct ProbeMode {
    pub label: String,
    pub samples: DVector<Complex64>,
    pub grid: MomentumGrid,
}

impl ProbeMode {
    pub fn new(
        label: impl Into<String>,
        grid: MomentumGrid,
        samples: DVector<Complex64>,
    ) -> Result<Self> {
        if samples.len() != grid.n {
            return Err(EtmError::Domain(format!(
                "probe has {} samples but the grid has {} points",
                samples.len(),
                grid.n
            )));
        }
        let norm = (samples.norm_squared() * grid.spacing).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(EtmError::Domain(format!("probe norm is {norm}")));
        }
        Ok(Self {
            label: label.into(),
            samples: samples / Complex64::new(norm, 0.0),
            grid,
        })
    }

    /// The electron-2 mode `φ_n` of a spectrum.
    pub fn from_mode(spec: &SchmidtSpectrum, n: usize) -> Result<Self> {
        if n >= spec.len() {
            return Err(EtmError::Domain(format!("mode index {n} out of range")));
        }
        Self::new(
            format!("phi_{n}"),
            spec.grid.clone(),
            spec.modes_phi.column(n).into_owned(),
        )
    }

    /// Normalised linear combination of probes on a common grid.
    pub fn superposition(
        label: impl Into<String>,
        parts: &[(Complex64, &ProbeMode)],
    ) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| EtmError::Domain("empty superposition".into()))?;
        let grid = first.1.grid.clone();
        let mut acc = DVector::<Complex64>::zeros(grid.n);
        for (c, p) in parts {
            grid.ensure_compatible(&p.grid)?;
            acc += &p.samples * *c;
        }
        Self::new(label, grid, acc)
    }

    pub fn norm_error(&self) -> f64 {
        (self.samples.norm_squared() * self.grid.spacing - 1.0).abs()
    }

    /// `Σ_k φ*(k) probe(k) e^{-i2πkδ} Δk`.
    fn overlap(&self, phi: &[Complex64], delta: f64) -> Complex64 {
        let dk = self.grid.spacing;
        self.grid
            .points()
            .iter()
            .zip(phi)
            .zip(self.samples.iter())
            .map(|((&k, f), p)| f.conj() * p * Complex64::from_polar(dk, -2.0 * PI * k * delta))
            .sum()
    }
}

/// Two-particle HOM curve of incoming mode `φ_n` against `probe`.
pub fn probe_coincidence(
    spec: &SchmidtSpectrum,
    n: usize,
    probe: &ProbeMode,
    deltas: &[f64],
) -> Result<CoincidenceScan> {
    if n >= spec.len() {
        return Err(EtmError::Domain(format!("mode index {n} out of range")));
    }
    spec.grid.ensure_compatible(&probe.grid)?;
    if deltas.is_empty() {
        return Err(EtmError::Domain("empty path-difference list".into()));
    }
    let phi: Vec<Complex64> = spec.modes_phi.column(n).iter().copied().collect();
    let p12: Vec<f64> = deltas
        .par_iter()
        .map(|&d| 0.5 + 0.5 * probe.overlap(&phi, d).norm_sqr())
        .collect();
    let (baseline, peak, fwhm) = summarize(deltas, &p12);
    Ok(CoincidenceScan {
        deltas: deltas.to_vec(),
        p12,
        fwhm,
        baseline,
        peak,
        truncated_weight: 0.0,
        kappa: spec.kappa,
        source: format!("mode {n} vs probe {}", probe.label),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    pub labels: Vec<String>,
    /// Match frequency per probe.
    pub estimates: Vec<f64>,
    /// Binomial standard error `√(p̂(1-p̂)/shots)` per probe.
    pub std_errors: Vec<f64>,
    /// Frequency of shots on which no probe fired.
    pub other: f64,
    pub shots: u64,
    /// Schmidt probabilities of the probed modes, when probes are modes.
    pub true_probs: Option<Vec<f64>>,
    pub seed: u64,
    pub threshold: f64,
}

impl TomographyResult {
    pub fn total(&self) -> f64 {
        self.estimates.iter().sum::<f64>() + self.other
    }
}

/// Mode-counting tomography: each shot draws an incoming ETM with
/// probability `p_n` and counts a hit on every probe whose zero-delay
/// coincidence exceeds `1/2 + threshold`.
pub fn run_tomography(
    spec: &SchmidtSpectrum,
    probes: &[ProbeMode],
    shots: u64,
    seed: u64,
    threshold: f64,
) -> Result<TomographyResult> {
    if shots == 0 {
        return Err(EtmError::Domain(
            "tomography needs at least one shot".into(),
        ));
    }
    if probes.is_empty() {
        return Err(EtmError::Domain(
            "tomography needs at least one probe".into(),
        ));
    }
    for p in probes {
        spec.grid.ensure_compatible(&p.grid)?;
    }
    // modes below the floor are never drawn
    let drawable: Vec<usize> = (0..spec.len())
        .filter(|&n| spec.probs[n] > P_FLOOR)
        .collect();
    let weights: Vec<f64> = drawable.iter().map(|&n| spec.probs[n]).collect();
    let total: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cumulative.push(acc);
    }

    // fires[d] lists the probes that light up when drawable mode d arrives
    let fires: Vec<Vec<usize>> = drawable
        .par_iter()
        .map(|&n| {
            let phi: Vec<Complex64> = spec.modes_phi.column(n).iter().copied().collect();
            probes
                .iter()
                .enumerate()
                .filter(|(_, p)| 0.5 + 0.5 * p.overlap(&phi, 0.0).norm_sqr() > 0.5 + threshold)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = vec![0u64; drawable.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen();
        let d = cumulative
            .partition_point(|&c| c <= u)
            .min(drawable.len() - 1);
        draws[d] += 1;
    }
    let mut counts = vec![0u64; probes.len()];
    let mut silent = 0u64;
    for (d, &hits) in draws.iter().enumerate() {
        if fires[d].is_empty() {
            silent += hits;
        }
        for &j in &fires[d] {
            counts[j] += hits;
        }
    }

    let n = shots as f64;
    let estimates: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let std_errors = estimates
        .iter()
        .map(|p| (p * (1.0 - p) / n).sqrt())
        .collect();
    let true_probs = probes
        .iter()
        .map(|p| {
            p.label
                .strip_prefix("phi_")
                .and_then(|s| s.parse::<usize>().ok())
                .and_then(|idx| spec.probs.get(idx).copied())
        })
        .collect::<Option<Vec<f64>>>();
    Ok(TomographyResult {
        labels: probes.iter().map(|p| p.label.clone()).collect(),
        estimates,
        std_errors,
        other: silent as f64 / n,
        shots,
        true_probs,
        seed,
        threshold,
    })
}
