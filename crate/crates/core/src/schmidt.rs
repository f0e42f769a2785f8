//! Schmidt decomposition of the pair amplitude into electronic temporal
//! modes (ETMs), entanglement measures, and the refinement controller.
//!
//! The production route diagonalises the reduced single-electron kernels
//! `K1 = Φ Φ† Δk` and `K2 = Φᵀ Φ* Δk`; the oracle route takes the SVD of
//! `Φ Δk` directly. Both produce `Φ = Σ √p_n ψ_n(k1) φ_n(k2)` with modes
//! normalised as `Σ |ψ|² Δk = 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitude::{build_amplitude, PairAmplitude};
use crate::error::{EtmError, Result};
use crate::linalg::{complete_orthonormal, hermitian_eigen, jacobi_svd, orthonormalize_columns};
use crate::params::{ControlParams, MomentumGrid};

/// Probabilities at or below this level are treated as numerical noise.
pub const P_FLOOR: f64 = 1e-12;
/// Probabilities closer than this are treated as one degenerate level.
pub const DEGENERACY_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-8;
/// Eigenvalues of `K1·Δk` below this are indistinguishable from rounding,
/// so their partner modes come from `K2` instead of from `Φᵀψ`.
const PAIR_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    KernelEig,
    SvdOracle,
}

/// One step of the grid refinement loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub n_points: usize,
    pub kappa: f64,
    /// `2|κ_new - κ_old| / (κ_new + κ_old)`; absent for the first step.
    pub rel_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub tol: f64,
    pub history: Vec<RefinementStep>,
}

#[derive(Debug, Clone)]
pub struct SchmidtSpectrum {
    /// Descending, clipped at zero.
    pub probs: Vec<f64>,
    /// Column `n` is `ψ_n` sampled on the grid.
    pub modes_psi: DMatrix<Complex64>,
    /// Column `n` is `φ_n` sampled on the grid.
    pub modes_phi: DMatrix<Complex64>,
    pub h2: f64,
    pub kappa: f64,
    pub grid: MomentumGrid,
    pub method: Method,
    /// Index ranges `[start, end)` of degenerate probabilities above the floor.
    pub degenerate: Vec<(usize, usize)>,
    pub convergence: Option<ConvergenceReport>,
    pub params: Option<ControlParams>,
}

impl SchmidtSpectrum {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.probs.iter().filter(|&&p| p > P_FLOOR).count()
    }

    pub fn converged(&self) -> bool {
        self.convergence.as_ref().is_none_or(|c| c.converged)
    }

    /// `Σ_n √p_n ψ_n(k1) φ_n(k2)` over the first `modes` modes.
    pub fn reconstruct(&self, modes: usize) -> DMatrix<Complex64> {
        let n = self.grid.n;
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for m in 0..modes.min(self.len()) {
            let w = self.probs[m].sqrt();
            if w == 0.0 {
                continue;
            }
            let psi = self.modes_psi.column(m) * Complex64::new(w, 0.0);
            out += psi * self.modes_phi.column(m).transpose();
        }
        out
    }

    /// Largest deviation of `∫ψ_n*ψ_m dk` and `∫φ_n*φ_m dk` from `δ_nm`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.len();
        let eye = DMatrix::<Complex64>::identity(n, n);
        let dk = Complex64::new(self.grid.spacing, 0.0);
        let gp = (self.modes_psi.adjoint() * &self.modes_psi) * dk - &eye;
        let gf = (self.modes_phi.adjoint() * &self.modes_phi) * dk - eye;
        crate::linalg::max_abs(&gp).max(crate::linalg::max_abs(&gf))
    }
}

fn check_normalized(amp: &PairAmplitude) -> Result<()> {
    let norm = amp.norm_squared();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(EtmError::Contract(format!(
            "pair amplitude must be normalised, found ‖Φ‖² = {norm}"
        )));
    }
    Ok(())
}

/// Reduced single-electron correlation kernels `(K1, K2)`.
pub fn reduce_kernels(amp: &PairAmplitude) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    check_normalized(amp)?;
    let dk = amp.grid.spacing;
    if amp.is_real() {
        let phi = amp.values.map(|z| z.re);
        let k1 = (&phi * phi.transpose()) * dk;
        let k2 = (phi.transpose() * &phi) * dk;
        Ok((
            k1.map(|x| Complex64::new(x, 0.0)),
            k2.map(|x| Complex64::new(x, 0.0)),
        ))
    } else {
        let phi = &amp.values;
        let dkc = Complex64::new(dk, 0.0);
        let k1 = (phi * phi.adjoint()) * dkc;
        let k2 = (phi.transpose() * phi.conjugate()) * dkc;
        Ok((k1, k2))
    }
}

/// Decomposes `amp` into ETM pairs with the chosen route.
pub fn schmidt_decompose(amp: &PairAmplitude, method: Method) -> Result<SchmidtSpectrum> {
    check_normalized(amp)?;
    let (probs, psi, phi) = match method {
        Method::KernelEig => kernel_route(amp)?,
        Method::SvdOracle => svd_route(amp),
    };
    let h2 = collision_entropy(&probs)?;
    Ok(SchmidtSpectrum {
        degenerate: degenerate_groups(&probs),
        kappa: h2.exp2(),
        h2,
        probs,
        modes_psi: psi,
        modes_phi: phi,
        grid: amp.grid.clone(),
        method,
        convergence: None,
        params: amp.params,
    })
}

type Modes = (Vec<f64>, DMatrix<Complex64>, DMatrix<Complex64>);

fn kernel_route(amp: &PairAmplitude) -> Result<Modes> {
    let n = amp.grid.n;
    let dk = amp.grid.spacing;
    let (k1, k2) = reduce_kernels(amp)?;
    // eigenvalues of K·Δk are the probabilities directly
    let dkc = Complex64::new(dk, 0.0);
    let eig1 = hermitian_eigen(&(k1 * dkc));
    let probs: Vec<f64> = eig1.values.iter().map(|&p| p.max(0.0)).collect();
    let scale = Complex64::new(1.0 / dk.sqrt(), 0.0);
    let psi = eig1.vectors.map(|z| z * scale);

    // φ_n ∝ Φᵀ ψ_n* Δk for resolvable modes, K2 eigenvectors for the rest
    let paired = probs.iter().take_while(|&&p| p > PAIR_FLOOR).count();
    let mut phi = DMatrix::<Complex64>::zeros(n, n);
    if paired > 0 {
        let psi_head = psi.columns(0, paired).map(|z| z.conj());
        let raw = amp.values.transpose() * psi_head;
        phi.columns_mut(0, paired).copy_from(&raw);
    }
    let mut unit = phi.map(|z| z * Complex64::new(dk.sqrt(), 0.0));
    if paired < n {
        let eig2 = hermitian_eigen(&(k2 * dkc));
        unit.columns_mut(paired, n - paired)
            .copy_from(&eig2.vectors.columns(paired, n - paired));
    }
    let keep = orthonormalize_columns(&mut unit);
    complete_orthonormal(&mut unit, &keep);
    let phi = unit.map(|z| z * scale);
    Ok((probs, psi, phi))
}

fn svd_route(amp: &PairAmplitude) -> Modes {
    let dk = amp.grid.spacing;
    let a = amp.values.map(|z| z * dk);
    let svd = jacobi_svd(&a);
    let probs = svd.singular_values.iter().map(|s| s * s).collect();
    let scale = Complex64::new(1.0 / dk.sqrt(), 0.0);
    let psi = svd.u.map(|z| z * scale);
    let phi = svd.v.map(|z| z.conj() * scale);
    (probs, psi, phi)
}

fn degenerate_groups(probs: &[f64]) -> Vec<(usize, usize)> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=probs.len() {
        let split = i == probs.len()
            || probs[i] <= P_FLOOR
            || (probs[start] - probs[i]).abs() > DEGENERACY_TOL;
        if split {
            if i - start > 1 && probs[start] > P_FLOOR {
                groups.push((start, i));
            }
            if i < probs.len() && probs[i] <= P_FLOOR {
                break;
            }
            start = i;
        }
    }
    groups
}

/// Collision (Rényi-2) entropy in bits, `-log2 Σ p_n²`.
pub fn collision_entropy(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return Err(EtmError::Domain("empty probability vector".into()));
    }
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(EtmError::Domain(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    let purity: f64 = probs.iter().map(|p| p.max(0.0).powi(2)).sum();
    Ok(-purity.log2())
}

/// Effective number of participating modes, `2^{H2} = 1 / Σ p_n²`.
pub fn schmidt_number(probs: &[f64]) -> Result<f64> {
    Ok(collision_entropy(probs)?.exp2())
}

/// Symmetric relative change used as the refinement stopping rule.
pub fn relative_change(previous: f64, next: f64) -> f64 {
    2.0 * (next - previous).abs() / (next + previous)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeOptions {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    #[serde(default = "default_growth")]
    pub growth: f64,
    #[serde(default = "default_method")]
    pub method: Method,
}

fn default_tol() -> f64 {
    0.05
}
fn default_max_points() -> usize {
    3200
}
fn default_growth() -> f64 {
    1.5
}
fn default_method() -> Method {
    Method::KernelEig
}

impl Default for ConvergeOptions {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_points: default_max_points(),
            growth: default_growth(),
            method: default_method(),
        }
    }
}

impl ConvergeOptions {
    pub fn validate(&self) -> crate::error::ValidationReport {
        let mut r = crate::error::ValidationReport::default();
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            r.push(
                "convergence.tol",
                format!("must be non-negative, got {}", self.tol),
            );
        }
        if self.max_points < 8 {
            r.push(
                "convergence.max_points",
                format!("must be at least 8, got {}", self.max_points),
            );
        }
        if !(self.growth.is_finite() && self.growth > 1.0) {
            r.push(
                "convergence.growth",
                format!("must exceed 1, got {}", self.growth),
            );
        }
        r
    }
}

/// Refines the momentum grid at a fixed window until the Schmidt number
/// settles. Reaching `max_points` is reported through `converged = false`,
/// not as an error.
pub fn converge_spectrum(
    params: &ControlParams,
    opts: &ConvergeOptions,
) -> Result<SchmidtSpectrum> {
    params.validate().into_result()?;
    opts.validate().into_result()?;
    let mut current = *params;
    current.grid.half_window = Some(params.half_window());
    current.grid.q_half_window = Some(params.q_half_window());
    current.grid.n_points = current.grid.n_points.min(opts.max_points);

    let mut history: Vec<RefinementStep> = Vec::new();
    loop {
        let amp = build_amplitude(&current)?;
        let mut spec = schmidt_decompose(&amp, opts.method)?;
        let rel_change = history
            .last()
            .map(|prev| relative_change(prev.kappa, spec.kappa));
        history.push(RefinementStep {
            n_points: current.grid.n_points,
            kappa: spec.kappa,
            rel_change,
        });
        log::debug!(
            "refinement n_points={} kappa={:.6} rel_change={:?}",
            current.grid.n_points,
            spec.kappa,
            rel_change
        );
        let converged = rel_change.is_some_and(|r| r <= opts.tol);
        let at_cap = current.grid.n_points >= opts.max_points;
        if converged || at_cap {
            if !converged {
                log::warn!(
                    "refinement cap of {} points reached without meeting tol {}",
                    opts.max_points,
                    opts.tol
                );
            }
            spec.params = Some(*params);
            spec.convergence = Some(ConvergenceReport {
                converged,
                tol: opts.tol,
                history,
            });
            return Ok(spec);
        }
        let next = (current.grid.n_points as f64 * opts.growth).ceil() as usize;
        current.grid.n_points = next.min(opts.max_points);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ChiModel, GridSpec};

    fn gaussian(grid: &MomentumGrid, center: f64, sigma: f64) -> Vec<f64> {
        let mut v: Vec<f64> = grid
            .points()
            .iter()
            .map(|k| (-(k - center).powi(2) / (4.0 * sigma * sigma)).exp())
            .collect();
        let norm = (v.iter().map(|x| x * x).sum::<f64>() * grid.spacing).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }

    fn product(grid: &MomentumGrid, f: &[f64], g: &[f64]) -> PairAmplitude {
        let values = DMatrix::from_fn(grid.n, grid.n, |i, j| Complex64::new(f[i] * g[j], 0.0));
        PairAmplitude::from_values(grid.clone(), values).unwrap()
    }

    /// Hermite-Gauss functions 0 and 1 are orthonormal to high accuracy on a
    /// wide grid.
    fn two_mode_toy(grid: &MomentumGrid) -> PairAmplitude {
        let k = grid.points();
        let f1 = gaussian(grid, 0.0, 0.5);
        let mut f2: Vec<f64> = k.iter().zip(&f1).map(|(k, f)| k * f).collect();
        let n2 = (f2.iter().map(|x| x * x).sum::<f64>() * grid.spacing).sqrt();
        f2.iter_mut().for_each(|x| *x /= n2);
        let w = 0.5f64.sqrt();
        let values = DMatrix::from_fn(grid.n, grid.n, |i, j| {
            Complex64::new(w * f1[i] * f1[j] + w * f2[i] * f2[j], 0.0)
        });
        PairAmplitude::from_values(grid.clone(), values).unwrap()
    }

    #[test]
    fn separable_kernel_is_rank_one_projector() {
        let grid = MomentumGrid::new(64, 4.0).unwrap();
        let f = gaussian(&grid, 0.3, 0.6);
        let g = gaussian(&grid, -0.2, 0.9);
        let (k1, _) = reduce_kernels(&product(&grid, &f, &g)).unwrap();
        let worst = (0..64)
            .flat_map(|i| (0..64).map(move |j| (i, j)))
            .map(|(i, j)| (k1[(i, j)].re - f[i] * f[j]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12);
    }

    #[test]
    fn kernel_traces_are_unity_and_spectra_agree() {
        let amp = build_amplitude(&ControlParams::new(1e-2, 2.0).with_grid(GridSpec {
            n_points: 96,
            q_points: 512,
            ..GridSpec::default()
        }))
        .unwrap();
        let (k1, k2) = reduce_kernels(&amp).unwrap();
        let dk = amp.grid.spacing;
        assert!((k1.trace().re * dk - 1.0).abs() < 1e-9);
        assert!((k2.trace().re * dk - 1.0).abs() < 1e-9);
        let dkc = Complex64::new(dk, 0.0);
        let e1 = hermitian_eigen(&(k1 * dkc)).values;
        let e2 = hermitian_eigen(&(k2 * dkc)).values;
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn unnormalised_input_is_a_contract_violation() {
        let grid = MomentumGrid::new(16, 2.0).unwrap();
        let mut amp = product(
            &grid,
            &gaussian(&grid, 0.0, 0.5),
            &gaussian(&grid, 0.0, 0.5),
        );
        amp.values *= Complex64::new(1.1, 0.0);
        assert!(matches!(reduce_kernels(&amp), Err(EtmError::Contract(_))));
        assert!(matches!(
            schmidt_decompose(&amp, Method::KernelEig),
            Err(EtmError::Contract(_))
        ));
    }

    #[test]
    fn separable_input_has_unit_kappa() {
        let grid = MomentumGrid::new(48, 4.0).unwrap();
        let amp = product(
            &grid,
            &gaussian(&grid, 0.0, 0.7),
            &gaussian(&grid, 0.5, 0.4),
        );
        for method in [Method::KernelEig, Method::SvdOracle] {
            let s = schmidt_decompose(&amp, method).unwrap();
            assert!((s.probs[0] - 1.0).abs() < 1e-10);
            assert!(s.probs[1..].iter().all(|&p| p < 1e-10));
            assert!((s.kappa - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn two_mode_toy_spectrum() {
        let grid = MomentumGrid::new(101, 6.0).unwrap();
        let amp = two_mode_toy(&grid);
        for method in [Method::KernelEig, Method::SvdOracle] {
            let s = schmidt_decompose(&amp, method).unwrap();
            assert!((s.probs[0] - 0.5).abs() < 1e-9, "{:?}", &s.probs[..3]);
            assert!((s.probs[1] - 0.5).abs() < 1e-9);
            assert!((s.kappa - 2.0).abs() < 1e-6);
            assert!((s.h2 - 1.0).abs() < 1e-6);
            assert_eq!(s.degenerate, vec![(0, 2)]);
        }
    }

    #[test]
    fn spectrum_invariants_hold_for_both_routes() {
        let amp = build_amplitude(&ControlParams::new(1e-5, 0.05).with_grid(GridSpec {
            n_points: 80,
            q_points: 512,
            ..GridSpec::default()
        }))
        .unwrap();
        let eig = schmidt_decompose(&amp, Method::KernelEig).unwrap();
        let svd = schmidt_decompose(&amp, Method::SvdOracle).unwrap();
        for s in [&eig, &svd] {
            assert!((s.probs.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            assert!(s.orthonormality_error() < 1e-8, "{:?}", s.method);
            let rebuilt = s.reconstruct(s.len());
            let err = (&rebuilt - &amp.values).norm() / amp.values.norm();
            assert!(err < 1e-6, "{:?}: {err}", s.method);
            assert_eq!(s.kappa, s.h2.exp2());
        }
        for (a, b) in eig.probs.iter().zip(&svd.probs) {
            assert!((a - b).abs() < 1e-8);
        }
        for n in 0..3 {
            let overlap =
                (eig.modes_psi.column(n).dotc(&svd.modes_psi.column(n)) * amp.grid.spacing).norm();
            assert!((overlap - 1.0).abs() < 1e-6, "mode {n}: {overlap}");
        }
    }

    #[test]
    fn transposing_swaps_mode_families() {
        let amp = build_amplitude(&ControlParams::new(3e-3, 0.3).with_grid(GridSpec {
            n_points: 64,
            q_points: 400,
            ..GridSpec::default()
        }))
        .unwrap();
        // break the exchange symmetry so the two families differ
        let grid = amp.grid.clone();
        let shifted = DMatrix::from_fn(grid.n, grid.n, |i, j| {
            amp.values[(i, j)] * Complex64::new((-0.1 * grid.points()[j]).exp(), 0.0)
        });
        let amp = PairAmplitude::from_values(grid, shifted).unwrap();
        let a = schmidt_decompose(&amp, Method::KernelEig).unwrap();
        let b = schmidt_decompose(&amp.transposed(), Method::KernelEig).unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            assert!((x - y).abs() < 1e-9);
        }
        let dk = amp.grid.spacing;
        for n in 0..3 {
            let o = (a.modes_psi.column(n).dotc(&b.modes_phi.column(n)) * dk).norm();
            assert!((o - 1.0).abs() < 1e-6, "mode {n}: {o}");
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(collision_entropy(&[1.0]).unwrap(), 0.0);
        assert_eq!(schmidt_number(&[1.0]).unwrap(), 1.0);
        assert!((schmidt_number(&[0.5, 0.5]).unwrap() - 2.0).abs() < 1e-15);
        for m in [3usize, 7, 16] {
            let p = vec![1.0 / m as f64; m];
            assert!((collision_entropy(&p).unwrap() - (m as f64).log2()).abs() < 1e-12);
            assert!((schmidt_number(&p).unwrap() - m as f64).abs() < 1e-12);
        }
        let h = collision_entropy(&[0.7, 0.2, 0.1]).unwrap();
        assert!((h - (-(0.54f64).log2())).abs() < 1e-15);
        assert!((h - 0.888_968_687_611_256_3).abs() < 1e-12);
        assert!(matches!(collision_entropy(&[]), Err(EtmError::Domain(_))));
        assert!(matches!(
            collision_entropy(&[0.3, 0.3]),
            Err(EtmError::Domain(_))
        ));
    }

    #[test]
    fn degenerate_groups_are_reported() {
        assert_eq!(degenerate_groups(&[0.4, 0.3, 0.3, 0.0]), vec![(1, 3)]);
        assert!(degenerate_groups(&[0.6, 0.4]).is_empty());
        assert!(degenerate_groups(&[1.0, 0.0, 0.0]).is_empty());
    }

    #[test]
    fn separable_params_converge_after_one_refinement() {
        let p = ControlParams::new(1e-9, 0.8)
            .with_chi(ChiModel::zero_exchange())
            .with_grid(GridSpec {
                n_points: 40,
                q_points: 64,
                ..GridSpec::default()
            });
        let s = converge_spectrum(&p, &ConvergeOptions::default()).unwrap();
        let report = s.convergence.unwrap();
        assert!(report.converged);
        assert_eq!(report.history.len(), 2);
        assert_eq!(report.history[1].n_points, 60);
        assert!(report.history.iter().all(|h| (h.kappa - 1.0).abs() < 1e-6));
    }

    #[test]
    fn unreachable_tolerance_hits_cap() {
        let p = ControlParams::new(1e-5, 0.05).with_grid(GridSpec {
            n_points: 32,
            q_points: 256,
            ..GridSpec::default()
        });
        let opts = ConvergeOptions {
            tol: 0.0,
            max_points: 80,
            ..ConvergeOptions::default()
        };
        let s = converge_spectrum(&p, &opts).unwrap();
        let report = s.convergence.unwrap();
        assert!(!report.converged);
        let sizes: Vec<usize> = report.history.iter().map(|h| h.n_points).collect();
        assert_eq!(sizes, vec![32, 48, 72, 80]);
    }

    #[test]
    fn converged_history_meets_criterion() {
        let p = ControlParams::new(1e-2, 2.0).with_grid(GridSpec {
            n_points: 64,
            q_points: 512,
            ..GridSpec::default()
        });
        let s = converge_spectrum(&p, &ConvergeOptions::default()).unwrap();
        let report = s.convergence.unwrap();
        assert!(report.converged);
        let last = report.history.last().unwrap();
        assert!(last.rel_change.unwrap() <= 0.05);
        for w in report.history.windows(2) {
            let r = relative_change(w[0].kappa, w[1].kappa);
            assert_eq!(Some(r), w[1].rel_change);
        }
    }
}
