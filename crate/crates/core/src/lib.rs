//! Numerical toolkit for calibration-based area lower bounds of minimal
//! submanifolds through the center of a geodesic ball in rotationally
//! symmetric spaces `ds² = dr² + φ(r)² dΩ²`.
//!
//! * [`warp`]: warp profiles, polar and Poincaré-ball coordinates, chart Christoffels.
//! * [`calibration`]: the field `W = f(r) ∂_r`, its divergence on k-frames,
//!   reference areas and the condition verifier.
//! * [`mesh`]: triangulated surfaces through the center, their Riemannian area,
//!   boundary fluxes of `W` and the divergence-theorem check.
//! * [`minimize`]: constrained discrete area minimization and the bound check.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod calibration;
pub mod error;
pub mod interp;
pub mod mesh;
pub mod minimize;
pub mod quadrature;
pub mod sum;
pub mod warp;

pub use error::{Error, Result};

/// Version string embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
