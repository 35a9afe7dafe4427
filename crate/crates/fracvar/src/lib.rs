//! Fractional variational calculus for dynamical systems.
//!
//! The crate builds fractional Poincare-Cartan forms over a coordinate chart,
//! takes fractional exterior derivatives, classifies systems through the
//! (fractional) Helmholtz conditions, derives Hamilton / Euler-Lagrange
//! equations of motion: classical and fractional: and integrates the
//! resulting mixed integer/fractional systems numerically.
//!
//! Layering, bottom up:
//! - [`specialfn`]: gamma, generalized binomial, Mittag-Leffler series
//! - [`expr`]: power expressions, parser, exact fractional partials
//! - [`forms`]: fractional differential forms and the exterior derivative
//! - [`helmholtz`]: inverse-problem classifiers
//! - [`eqgen`]: symbolic derivation of equations of motion
//! - [`numfrac`]: Caputo quadrature, Grünwald-Letnikov weights, fractional
//!   initial-value integrators and end-to-end simulation

pub mod error;
pub mod specialfn;
pub mod expr;
pub mod forms;
pub mod helmholtz;
pub mod eqgen;
pub mod numfrac;

pub use error::{Error, Result};
