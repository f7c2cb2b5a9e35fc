//! Certified large-argument Bessel asymptotics and the construction of complex
//! eigenvalues for `−Δ + ih·χ_{B₁}` on `ℝ^d`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod error;
pub mod fixtures;
pub mod lt_divergence;
pub mod phase_functions;
pub mod quadrature;
pub mod radial_oracle;
pub mod scalar;
pub mod special_functions;
pub mod spectral_solver;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision complex scalar used throughout the solver layers.
pub type C64 = num_complex::Complex<f64>;
