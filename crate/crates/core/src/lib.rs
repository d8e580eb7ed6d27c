//! Numerical toolkit for the fractional-logarithmic Laplacian (−Δ)^{s+Log},
//! the derivative in the order t of (−Δ)^t at t = s.
//!
//! The crate evaluates the operator in several equivalent ways (principal
//! value kernel quadrature, Fourier multiplier, order derivative, half-space
//! extension), computes its energy forms on compactly supported fields,
//! discretizes the Dirichlet problem with P1 hats, and analyses eigenvalue
//! counting functions against their Weyl asymptotics.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dirichlet;
pub mod domain;
pub mod energy;
pub mod error;
pub mod extension;
pub mod kernels;
pub mod parallel;
pub mod pointwise;
pub mod quadrature;
pub mod specfun;
pub mod spectral;
pub mod test_functions;

pub use error::{Error, Result};
pub use specfun::{OperatorConstants, OperatorParams};
