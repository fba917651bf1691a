//! Elementary symmetric functions on Garding cones, numerical checks of
//! the curvature-estimate inequalities for `sigma_{n-1}`, principal
//! curvatures of Euclidean and Minkowski graphs, and a cone-preserving
//! Newton continuation solver for `sigma_{n-1}` Hessian equations.

// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cone;
pub mod error;
pub mod estimate_verify;
pub mod geometry;
pub mod keyineq;
pub mod linalg;
pub mod report;
pub mod rng;
pub mod solver;
pub mod sweep;
pub mod symfunc;

pub use error::{Error, Result};
