//! Pair amplitude `Φ(k1, k2)` on a uniform momentum grid.
//!
//! The amplitude is the trapezoidal quadrature over the exchanged momentum
//!
//! ```text
//! Φ(k1,k2) ∝ Σ_q w_q sinc[c_s q (k1-k2)] α1(k1-q) χ(q) α2(k2+q)
//! ```
//!
//! followed by discrete L² normalisation.

use std::ops::{Add, AddAssign, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EtmError, Result};
use crate::params::{sinc, ChiModel, ControlParams, MomentumGrid, EDGE_WEIGHT_LIMIT};

/// Longitudinal exchange coupling `χ(q)`.
pub trait ExchangeCoupling: Sync {
    fn coupling(&self, q: f64) -> Complex64;
}

impl ExchangeCoupling for ChiModel {
    fn coupling(&self, q: f64) -> Complex64 {
        Complex64::new(self.value(q), 0.0)
    }
}

impl<F: Fn(f64) -> Complex64 + Sync> ExchangeCoupling for F {
    fn coupling(&self, q: f64) -> Complex64 {
        self(q)
    }
}

/// Single-electron momentum amplitude `α(k)`; need not be normalised.
pub trait ElectronAmplitude: Sync {
    fn amplitude(&self, k: f64) -> Complex64;
}

/// Gaussian wave packet whose momentum density has standard deviation
/// `sigma_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleElectronAmplitude {
    pub sigma_e: f64,
    pub center: f64,
}

impl SingleElectronAmplitude {
    pub fn new(sigma_e: f64) -> Self {
        Self {
            sigma_e,
            center: 0.0,
        }
    }

    pub fn value(&self, k: f64) -> f64 {
        let x = k - self.center;
        (-x * x / (4.0 * self.sigma_e * self.sigma_e)).exp()
    }

    /// Samples normalised so that `Σ|α|²Δk = 1`.
    pub fn sample(&self, grid: &MomentumGrid) -> Vec<f64> {
        let mut v: Vec<f64> = grid.points().iter().map(|&k| self.value(k)).collect();
        let norm = (v.iter().map(|a| a * a).sum::<f64>() * grid.spacing).sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        v
    }
}

impl ElectronAmplitude for SingleElectronAmplitude {
    fn amplitude(&self, k: f64) -> Complex64 {
        Complex64::new(self.value(k), 0.0)
    }
}

/// Uniform trapezoidal rule on `[-half_window, half_window]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn trapezoid(points: usize, half_window: f64) -> Result<Self> {
        if points < 2 || !(half_window.is_finite() && half_window > 0.0) {
            return Err(EtmError::Config(format!(
                "quadrature needs >= 2 nodes on a positive window (got {points} over ±{half_window})"
            )));
        }
        let h = 2.0 * half_window / (points - 1) as f64;
        let nodes = (0..points)
            .map(|l| {
                let m = points - 1 - l;
                if l == m {
                    0.0
                } else if l < m {
                    -half_window + l as f64 * h
                } else {
                    half_window - m as f64 * h
                }
            })
            .collect();
        let mut weights = vec![h; points];
        weights[0] *= 0.5;
        weights[points - 1] *= 0.5;
        Ok(Self { nodes, weights })
    }
}

/// Normalised pair amplitude; entry `(i, j)` is `Φ(k_i, k_j)`.
#[derive(Debug, Clone)]
pub struct PairAmplitude {
    pub grid: MomentumGrid,
    pub values: DMatrix<Complex64>,
    /// Factor `N^{-1/2}` that was applied to the raw quadrature sum.
    pub norm_constant: f64,
    pub params: Option<ControlParams>,
}

impl PairAmplitude {
    /// Wraps raw samples and normalises them.
    pub fn from_values(grid: MomentumGrid, values: DMatrix<Complex64>) -> Result<Self> {
        if values.nrows() != grid.n || values.ncols() != grid.n {
            return Err(EtmError::Domain(format!(
                "amplitude is {}x{} but the grid has {} points",
                values.nrows(),
                values.ncols(),
                grid.n
            )));
        }
        normalize(grid, values, None)
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing.powi(2)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0)
    }

    /// Swaps the roles of the two electrons.
    pub fn transposed(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.transpose(),
            norm_constant: self.norm_constant,
            params: self.params,
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.grid.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.values[(i, j)] - self.values[(j, i)]).norm());
            }
        }
        worst
    }
}

fn normalize(
    grid: MomentumGrid,
    mut values: DMatrix<Complex64>,
    params: Option<ControlParams>,
) -> Result<PairAmplitude> {
    if let Some((idx, _)) = values
        .iter()
        .enumerate()
        .find(|(_, z)| !(z.re.is_finite() && z.im.is_finite()))
    {
        // column-major storage
        let n = values.nrows();
        return Err(EtmError::Numerical {
            message: "non-finite amplitude sample".into(),
            row: idx % n,
            col: idx / n,
        });
    }
    let ssq = values.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing * grid.spacing;
    if !(ssq.is_finite() && ssq > 0.0) {
        return Err(EtmError::Numerical {
            message: format!("amplitude norm is {ssq}"),
            row: 0,
            col: 0,
        });
    }
    let norm_constant = 1.0 / ssq.sqrt();
    values.iter_mut().for_each(|z| *z *= norm_constant);
    Ok(PairAmplitude {
        grid,
        values,
        norm_constant,
        params,
    })
}

/// Builds `Φ` for the given control point with Gaussian electrons and the
/// configured coupling model.
pub fn build_amplitude(params: &ControlParams) -> Result<PairAmplitude> {
    let grid = params.momentum_grid()?;
    let rule = QuadratureRule::trapezoid(params.grid.q_points, params.q_half_window())?;
    check_edge_weight(&params.chi, &rule)?;
    let alpha = SingleElectronAmplitude::new(params.sigma_e);
    let mut amp = assemble(
        &grid,
        &rule,
        params.sinc_scale(),
        &alpha,
        &alpha,
        &params.chi,
    )?;
    amp.params = Some(*params);
    Ok(amp)
}

fn check_edge_weight(chi: &dyn ExchangeCoupling, rule: &QuadratureRule) -> Result<()> {
    let peak = rule
        .nodes
        .iter()
        .map(|&q| chi.coupling(q).norm())
        .fold(0.0f64, f64::max);
    let edge = chi
        .coupling(rule.nodes[0])
        .norm()
        .max(chi.coupling(*rule.nodes.last().unwrap()).norm());
    if peak == 0.0 {
        return Err(EtmError::Config(
            "exchange coupling vanishes on every quadrature node".into(),
        ));
    }
    if edge > EDGE_WEIGHT_LIMIT * peak {
        return Err(EtmError::Config(format!(
            "q-window ±{} too small: edge coupling is {:.3e} of the peak (limit {EDGE_WEIGHT_LIMIT:e})",
            rule.nodes.last().unwrap(),
            edge / peak
        )));
    }
    Ok(())
}

trait Sample:
    Copy + Send + Sync + Add<Output = Self> + Mul<Output = Self> + Mul<f64, Output = Self> + AddAssign
{
    const ZERO: Self;
    fn from_complex(z: Complex64) -> Self;
    fn into_complex(self) -> Complex64;
    fn is_zero(self) -> bool;
}

impl Sample for f64 {
    const ZERO: Self = 0.0;
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    fn into_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
}

impl Sample for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn into_complex(self) -> Complex64 {
        self
    }
    fn is_zero(self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

/// Quadrature of the pair amplitude for arbitrary electron amplitudes and
/// coupling. The result is normalised; `params` is left unset.
pub fn assemble(
    grid: &MomentumGrid,
    rule: &QuadratureRule,
    sinc_scale: f64,
    alpha1: &dyn ElectronAmplitude,
    alpha2: &dyn ElectronAmplitude,
    chi: &dyn ExchangeCoupling,
) -> Result<PairAmplitude> {
    let n = grid.n;
    let k = grid.points();
    let nq = rule.nodes.len();

    // a1[i][l] = α1(k_i - q_l), a2[l][j] = α2(k_j + q_l), cw[l] = w_l χ(q_l)
    let mut a1 = Vec::with_capacity(n * nq);
    for &ki in k {
        a1.extend(rule.nodes.iter().map(|&q| alpha1.amplitude(ki - q)));
    }
    let mut a2 = Vec::with_capacity(n * nq);
    for &q in &rule.nodes {
        a2.extend(k.iter().map(|&kj| alpha2.amplitude(kj + q)));
    }
    let cw: Vec<Complex64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&q, &w)| chi.coupling(q) * w)
        .collect();

    // k_i - k_j depends only on i - j; sincs[l][o] holds offset o - (n-1).
    let width = 2 * n - 1;
    let mut sincs = vec![0.0; nq * width];
    for (l, &q) in rule.nodes.iter().enumerate() {
        let row = &mut sincs[l * width..(l + 1) * width];
        for (o, s) in row.iter_mut().enumerate() {
            let d = (o as f64 - (n - 1) as f64) * grid.spacing;
            *s = sinc(sinc_scale * q * d);
        }
    }

    let real = a1.iter().chain(&a2).chain(&cw).all(|z| z.im == 0.0);
    let values = if real {
        quadrature_rows::<f64>(n, nq, &a1, &a2, &cw, &sincs)
    } else {
        quadrature_rows::<Complex64>(n, nq, &a1, &a2, &cw, &sincs)
    };
    normalize(grid.clone(), values, None)
}

fn quadrature_rows<T: Sample>(
    n: usize,
    nq: usize,
    a1: &[Complex64],
    a2: &[Complex64],
    cw: &[Complex64],
    sincs: &[f64],
) -> DMatrix<Complex64> {
    let a1: Vec<T> = a1.iter().map(|&z| T::from_complex(z)).collect();
    let a2: Vec<T> = a2.iter().map(|&z| T::from_complex(z)).collect();
    let cw: Vec<T> = cw.iter().map(|&z| T::from_complex(z)).collect();
    let width = 2 * n - 1;
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![T::ZERO; n];
            for l in 0..nq {
                let c = cw[l] * a1[i * nq + l];
                if c.is_zero() {
                    continue;
                }
                let a2row = &a2[l * n..(l + 1) * n];
                let start = l * width + (n - 1 - i);
                let srow = &sincs[start..start + n];
                for ((acc, &a), &s) in row.iter_mut().zip(a2row).zip(srow) {
                    *acc += c * a * s;
                }
            }
            row
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| rows[i][j].into_complex())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// `k1 = k2`
    Diagonal,
    /// `k1 = -k2`
    Antidiagonal,
}

/// `|Φ|` along a line through the origin, parameterised by `k1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub axis: Axis,
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

impl CrossSection {
    /// RMS extent of `|Φ|²` along the cut.
    pub fn extent(&self) -> f64 {
        let (mut m0, mut m2) = (0.0, 0.0);
        for (&x, &v) in self.coords.iter().zip(&self.values) {
            m0 += v * v;
            m2 += v * v * x * x;
        }
        (m2 / m0).sqrt()
    }
}

pub fn amplitude_cross_section(amp: &PairAmplitude, axis: Axis) -> CrossSection {
    let n = amp.grid.n;
    let coords = amp.grid.points().to_vec();
    let values = (0..n)
        .map(|i| {
            let j = match axis {
                Axis::Diagonal => i,
                Axis::Antidiagonal => n - 1 - i,
            };
            amp.values[(i, j)].norm()
        })
        .collect();
    CrossSection {
        axis,
        coords,
        values,
    }
}
