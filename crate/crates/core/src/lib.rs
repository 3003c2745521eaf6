//! Numerical laboratory for the mass-critical Hartree equation with a focusing
//! power perturbation,
//!
//! ```text
//! i psi_t + Laplace psi + (|x|^{-2} * |psi|^2) psi + |psi|^{p-1} psi = 0,   x in R^3,
//! ```
//!
//! discretized on a periodic cube. The crate provides the conserved and
//! variational functionals, Nehari-projected ground-state solvers, a Strang
//! split-step integrator with a blow-up detector, and a binary field format.

pub mod error;
pub mod dynamics;
pub mod functionals;
pub mod groundstate;
pub mod io;
pub mod model;
pub mod special;
pub mod spectral;

mod fft3;

pub use error::{Error, Result};
pub use model::{make_gaussian, validate_params, Field, GridSpec, ModelParams};
pub use spectral::{HartreeMode, SpectralEngine, Spectrum};
