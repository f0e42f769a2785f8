//! Unit system and control parameters.
//!
//! Momenta are expressed in units of `k_p = 2π/λ_p` relative to `k0`,
//! lengths in units of `λ_p`. The only dynamical knob that survives the
//! nonrecoil limit is the dimensionless interaction time `T_I`, which enters
//! the sinc kernel through [`sinc_argument_scale`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{EtmError, Result, ValidationReport};

/// Electron Compton wavelength `h / (m_e c)` in nm.
pub const COMPTON_WAVELENGTH_NM: f64 = 2.426_310_238_67e-3;

/// Relative level below which the exchange coupling counts as negligible
/// when the q-window is chosen automatically.
const AUTO_WINDOW_LEVEL: f64 = 1e-7;

/// Edge weight (relative to the peak) above which a q-window is rejected.
pub const EDGE_WEIGHT_LIMIT: f64 = 1e-6;

/// Physical description of the film and beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSetup {
    /// Film length along the propagation direction (nm).
    #[serde(rename = "L")]
    pub length: f64,
    /// Polariton wavelength in the film (nm).
    pub lambda_p: f64,
    /// Electron speed in units of c.
    pub beta: f64,
    /// Electron Compton wavelength (nm).
    #[serde(rename = "lambda_C", default = "default_compton")]
    pub lambda_c: f64,
    /// Mean beam-film distance (nm).
    #[serde(default = "default_y0")]
    pub y0: f64,
    /// Transverse spread normal to the film (nm).
    #[serde(default = "default_sigma_y")]
    pub sigma_y: f64,
    /// Transverse momentum spread along the film (1/nm).
    #[serde(default)]
    pub sigma_x: Option<f64>,
    /// Film thickness (nm).
    #[serde(default = "default_thickness")]
    pub d: f64,
}

fn default_compton() -> f64 {
    COMPTON_WAVELENGTH_NM
}
fn default_y0() -> f64 {
    5.0
}
fn default_sigma_y() -> f64 {
    0.5
}
fn default_thickness() -> f64 {
    1.0
}

impl Default for PhysicalSetup {
    fn default() -> Self {
        Self {
            length: 1000.0,
            lambda_p: 100.0,
            beta: 0.5,
            lambda_c: COMPTON_WAVELENGTH_NM,
            y0: default_y0(),
            sigma_y: default_sigma_y(),
            sigma_x: None,
            d: default_thickness(),
        }
    }
}

impl PhysicalSetup {
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let lengths = [
            ("L", self.length),
            ("lambda_p", self.lambda_p),
            ("lambda_C", self.lambda_c),
            ("y0", self.y0),
            ("sigma_y", self.sigma_y),
            ("d", self.d),
        ];
        for (name, value) in lengths {
            if !(value.is_finite() && value > 0.0) {
                report.push(name, format!("must be a positive length, got {value}"));
            }
        }
        if let Some(sx) = self.sigma_x {
            if !(sx.is_finite() && sx > 0.0) {
                report.push("sigma_x", format!("must be positive, got {sx}"));
            }
        }
        if !(self.beta.is_finite() && self.beta > 0.0 && self.beta < 1.0) {
            report.push(
                "beta",
                format!("must satisfy 0 < beta < 1, got {}", self.beta),
            );
        }
        report
    }

    /// Transverse momentum spread, defaulting to `2π/λ_p`.
    pub fn sigma_x(&self) -> f64 {
        self.sigma_x.unwrap_or(2.0 * PI / self.lambda_p)
    }

    /// `y0 / λ_p`, the evanescent scale used by [`ChiModel`].
    pub fn evanescent_scale(&self) -> f64 {
        self.y0 / self.lambda_p
    }
}

/// Dimensionless interaction time `T_I = L λ_C / (β λ_p²)`.
pub fn dimensionless_time(setup: &PhysicalSetup) -> Result<f64> {
    setup.validate().into_result()?;
    Ok(setup.length * setup.lambda_c / (setup.beta * setup.lambda_p * setup.lambda_p))
}

/// Scale `c_s` such that the sinc argument on dimensionless momenta reads
/// `c_s · q · (k1 - k2)`.
///
/// With `ħ/m = λ_C c / 2π` and `T = L / v` one has `ħT/m = T_I λ_p² / 2π`;
/// two factors of `2π/λ_p` from the momenta leave `c_s = 2π T_I`.
pub fn sinc_argument_scale(t_i: f64) -> f64 {
    2.0 * PI * t_i
}

/// Unnormalized sinc, `sin(x)/x` with `sinc(0) = 1`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiKind {
    LorentzianPair,
    GaussianPair,
    FlatBand,
}

impl ChiKind {
    pub fn name(self) -> &'static str {
        match self {
            ChiKind::LorentzianPair => "lorentzian-pair",
            ChiKind::GaussianPair => "gaussian-pair",
            ChiKind::FlatBand => "flat-band",
        }
    }
}

/// Phenomenological longitudinal exchange coupling `χ(q)`.
///
/// Every built-in shape is a symmetric pair of peaks at `±center`, multiplied
/// by the evanescent weight `exp(-4π|q| y0/λ_p)`. A flat band with
/// `center = 0` and a vanishing width is the zero-exchange limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiModel {
    pub kind: ChiKind,
    #[serde(default = "default_center")]
    pub center: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_evanescent")]
    pub evanescent_scale: f64,
}

fn default_center() -> f64 {
    1.0
}
fn default_width() -> f64 {
    0.1
}
fn default_evanescent() -> f64 {
    0.05
}

impl Default for ChiModel {
    fn default() -> Self {
        Self {
            kind: ChiKind::LorentzianPair,
            center: default_center(),
            width: default_width(),
            evanescent_scale: default_evanescent(),
        }
    }
}

impl ChiModel {
    /// Narrow flat band at `q = 0`: the electrons exchange no momentum.
    pub fn zero_exchange() -> Self {
        Self {
            kind: ChiKind::FlatBand,
            center: 0.0,
            width: 1e-9,
            evanescent_scale: 0.0,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if !(self.width.is_finite() && self.width > 0.0) {
            report.push("chi.width", format!("must be positive, got {}", self.width));
        }
        if !(self.center.is_finite() && self.center >= 0.0) {
            report.push(
                "chi.center",
                format!("must be non-negative, got {}", self.center),
            );
        }
        if !(self.evanescent_scale.is_finite() && self.evanescent_scale >= 0.0) {
            report.push(
                "chi.evanescent_scale",
                format!("must be non-negative, got {}", self.evanescent_scale),
            );
        }
        report
    }

    pub fn evanescent_weight(&self, q: f64) -> f64 {
        (-4.0 * PI * q.abs() * self.evanescent_scale).exp()
    }

    fn peak_shape(&self, offset: f64) -> f64 {
        let g = self.width;
        match self.kind {
            ChiKind::LorentzianPair => g * g / (offset * offset + g * g),
            ChiKind::GaussianPair => (-offset * offset / (2.0 * g * g)).exp(),
            ChiKind::FlatBand => {
                if offset.abs() <= g {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn value(&self, q: f64) -> f64 {
        let pair = self.peak_shape(q - self.center) + self.peak_shape(q + self.center);
        pair * self.evanescent_weight(q)
    }

    /// Half-width beyond which `|χ|` stays below `level` times its peak.
    pub fn tail_extent(&self, level: f64) -> f64 {
        let peak = self.value(self.center).abs().max(f64::MIN_POSITIVE);
        let above = |q: f64| self.value(q).abs() > level * peak;
        let mut lo = self.center + self.width;
        if !above(lo) {
            return lo;
        }
        let mut step = self.width.max(1e-3);
        let mut hi = lo + step;
        while above(hi) {
            lo = hi;
            step *= 2.0;
            hi += step;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if above(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Discretisation knobs; `None` windows are resolved from the physics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    #[serde(default)]
    pub half_window: Option<f64>,
    #[serde(default = "default_q_points")]
    pub q_points: usize,
    #[serde(default)]
    pub q_half_window: Option<f64>,
}

fn default_n_points() -> usize {
    800
}
fn default_q_points() -> usize {
    1024
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_points: default_n_points(),
            half_window: None,
            q_points: default_q_points(),
            q_half_window: None,
        }
    }
}

impl GridSpec {
    pub fn with_points(n_points: usize) -> Self {
        Self {
            n_points,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.n_points < 8 {
            report.push(
                "grid.n_points",
                format!("must be at least 8, got {}", self.n_points),
            );
        }
        if self.q_points < 2 {
            report.push(
                "grid.q_points",
                format!("must be at least 2, got {}", self.q_points),
            );
        }
        for (name, w) in [
            ("grid.half_window", self.half_window),
            ("grid.q_half_window", self.q_half_window),
        ] {
            if let Some(w) = w {
                if !(w.is_finite() && w > 0.0) {
                    report.push(name, format!("must be positive, got {w}"));
                }
            }
        }
        report
    }
}

/// The control set λ together with the numerical model it is evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlParams {
    #[serde(rename = "T_I")]
    pub t_i: f64,
    pub sigma_e: f64,
    #[serde(default)]
    pub chi: ChiModel,
    #[serde(default)]
    pub grid: GridSpec,
}

impl ControlParams {
    /// Default coupling and grid at the given control point.
    pub fn new(t_i: f64, sigma_e: f64) -> Self {
        Self {
            t_i,
            sigma_e,
            chi: ChiModel::default(),
            grid: GridSpec::default(),
        }
    }

    pub fn with_chi(mut self, chi: ChiModel) -> Self {
        self.chi = chi;
        self
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_points(mut self, n_points: usize) -> Self {
        self.grid.n_points = n_points;
        self
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if !(self.t_i.is_finite() && self.t_i > 0.0) {
            report.push("T_I", format!("must be positive, got {}", self.t_i));
        }
        if !(self.sigma_e.is_finite() && self.sigma_e > 0.0) {
            report.push("sigma_e", format!("must be positive, got {}", self.sigma_e));
        }
        report.merge(self.chi.validate());
        report.merge(self.grid.validate());
        report
    }

    pub fn sinc_scale(&self) -> f64 {
        sinc_argument_scale(self.t_i)
    }

    /// Momentum half-window `W = 5σ_e + 3q_p` unless overridden.
    pub fn half_window(&self) -> f64 {
        self.grid
            .half_window
            .unwrap_or(5.0 * self.sigma_e + 3.0 * self.chi.center)
    }

    /// Exchange-momentum half-window: `3q_p + 5γ`, widened until the
    /// coupling tail has decayed, unless overridden.
    pub fn q_half_window(&self) -> f64 {
        self.grid.q_half_window.unwrap_or_else(|| {
            let nominal = 3.0 * self.chi.center + 5.0 * self.chi.width;
            nominal.max(self.chi.tail_extent(AUTO_WINDOW_LEVEL))
        })
    }

    pub fn momentum_grid(&self) -> Result<MomentumGrid> {
        self.validate().into_result()?;
        MomentumGrid::new(self.grid.n_points, self.half_window())
    }
}

/// Uniform grid symmetric about zero, `k_i = -W + iΔ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumGrid {
    pub n: usize,
    pub half_window: f64,
    pub spacing: f64,
    #[serde(skip)]
    points: Vec<f64>,
}

impl MomentumGrid {
    pub fn new(n: usize, half_window: f64) -> Result<Self> {
        let mut report = ValidationReport::default();
        if n < 8 {
            report.push("grid.n_points", format!("must be at least 8, got {n}"));
        }
        if !(half_window.is_finite() && half_window > 0.0) {
            report.push(
                "grid.half_window",
                format!("must be positive, got {half_window}"),
            );
        }
        report.into_result()?;
        let spacing = 2.0 * half_window / (n - 1) as f64;
        let points = (0..n)
            .map(|i| {
                // mirror the upper half so the grid is exactly symmetric
                let j = n - 1 - i;
                if i == j {
                    0.0
                } else if i < j {
                    -half_window + i as f64 * spacing
                } else {
                    half_window - j as f64 * spacing
                }
            })
            .collect();
        Ok(Self {
            n,
            half_window,
            spacing,
            points,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn compatible(&self, other: &MomentumGrid) -> bool {
        self.n == other.n
            && (self.half_window - other.half_window).abs() <= 1e-12 * self.half_window
    }

    pub(crate) fn ensure_compatible(&self, other: &MomentumGrid) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(EtmError::Domain(format!(
                "grid mismatch: {} points over ±{} vs {} points over ±{}",
                self.n, self.half_window, other.n, other.half_window
            )))
        }
    }
}
