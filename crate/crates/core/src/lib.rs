//! Metrizability analysis for SO(3)-invariant affine connections in four
//! dimensions.

// `!(x <= tol)` is used on purpose so that NaN fails a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the tensor formulas.
#![allow(clippy::needless_range_loop)]

pub mod ad;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod sampling;

pub use error::{Error, Result};
pub mod classify;
pub mod cli;
pub mod config;
pub mod geodesic;
pub mod lagrangian;
pub mod metrize;
pub mod ode;
pub mod pipeline;
pub mod potential;
pub mod quadrature;
pub mod report;
pub mod tolerances;
pub mod verify;
