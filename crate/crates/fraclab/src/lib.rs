//! Numerical laboratory for the fractional Laplacian.
//!
//! The crate provides three independent evaluation routes for `(-Δ)^s`
//! (Fourier multiplier, singular-integral quadrature, heat semigroup),
//! closed-form reference identities used as oracles, and simulators built
//! on top of the operator: long-jump random walks, dislocation dynamics,
//! the harmonic extension to the upper half space, fractional perimeters
//! and nonlocal curvature, and fractional ground states.

// quadrature tables keep guard digits; !(x > 0) comparisons reject NaN
#![allow(clippy::excessive_precision)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod extension;
pub mod field;
pub mod fraclap;
pub mod geometry;
pub mod quad;
pub mod reference;
pub mod specfun;
pub mod stochastic;
pub mod variational;

pub use error::{Error, Result};
pub use specfun::{Dimension, FracOrder};
