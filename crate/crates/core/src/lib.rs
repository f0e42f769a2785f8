//! Free-electron pair correlations mediated by a polariton-supporting film.
//!
//! The crate builds the longitudinal pair amplitude of two electrons that
//! exchanged momentum through the film, decomposes it into electronic
//! temporal modes (ETMs), and predicts the two observables used to probe
//! them: the fermionic Hong-Ou-Mandel coincidence peak and coincidence
//! discrimination against a shaped probe mode.
//!
//! All quantities are dimensionless. Momenta are measured relative to the
//! mean momentum `k0` in units of `k_p = 2π/λ_p`, path differences in units
//! of `λ_p`.
//!
//! ```no_run
//! use etmsim::{amplitude, params::ControlParams, schmidt};
//!
//! let params = ControlParams::new(1e-3, 2.0);
//! let amp = amplitude::build_amplitude(&params).unwrap();
//! let spec = schmidt::schmidt_decompose(&amp, schmidt::Method::KernelEig).unwrap();
//! println!("kappa = {:.4}", spec.kappa);
//! ```

pub mod amplitude;
pub mod cli;
pub mod config;
pub mod discriminate;
pub mod error;
pub mod hom;
pub mod io;
pub mod linalg;
pub mod params;
pub mod schmidt;
pub mod sweep;

pub use error::{EtmError, FieldError, Result, ValidationReport};
pub use num_complex::Complex64;
