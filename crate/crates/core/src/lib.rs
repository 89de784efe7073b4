//! Synthesis of compactly supported complex potentials whose fixed-energy,
//! fixed-incidence scattering amplitude approximates a prescribed pattern on
//! the unit sphere, together with an independent forward solver to check the
//! result.
//!
//! The pipeline runs in four stages:
//!
//! 1. expand the target pattern `f` in spherical harmonics and truncate
//!    ([`sphere`]);
//! 2. build a source density `h` whose Born amplitude reproduces the
//!    truncated pattern ([`synthesis`]);
//! 3. turn `h` into a potential `q = h / (u₀ − G h)`, perturbing `h` where
//!    the denominator vanishes ([`potential`]);
//! 4. solve the Lippmann–Schwinger equation for `q` and compare the far
//!    field with `f` ([`forward`]).

pub mod error;
pub mod forward;
pub mod io;
pub mod pipeline;
pub mod potential;
pub mod quadrature;
pub mod specfun;
pub mod sphere;
pub mod synthesis;

pub use error::{Error, NumericalError, Result};
pub use num_complex::Complex64;
