//! Numerical toolkit for optimal transport on compact surfaces.
//!
//! The crate discretizes the round sphere and the flat torus, solves
//! discrete optimal transport with costs `h(d(x, y))`, and evaluates
//! gradient inequalities for Kantorovich potentials together with their
//! heat-flow and BV consequences.
//!
//! Modules:
//! - [`manifold`]: meshes, geodesics, cost matrices, mesh I/O.
//! - [`geometry`]: parallel transport, arc-length variations, frames and
//!   curvature algebra checks.
//! - [`ot`]: exact network simplex, log-domain Sinkhorn, c-transforms and
//!   duality diagnostics.
//! - [`fgi`]: discrete gradients and the gradient inequality harness.
//! - [`experiments`]: heat flow, Wasserstein projection, regularized
//!   minimization and BV estimates.
//! - [`scenario`]: JSON scenario configuration, orchestration and artifact
//!   output.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod fgi;
pub mod geometry;
pub mod manifold;
pub mod ot;
pub mod scenario;

pub use error::{Error, Result};
