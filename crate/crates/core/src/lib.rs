//! Numerical verification of Korn and Korn-like inequalities on thin curved
//! strips: optimal Korn constants from generalized eigenproblems, quadrature
//! checks of weighted-gradient and Hardy-type inequalities with explicit
//! constants, and scaling sweeps in the thickness parameter.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analytic;
pub mod ansatz;
pub mod cli;
pub mod discretize;
pub mod error;
pub mod geometry;
pub mod operators;
pub mod quadrature;
pub mod solve;
pub mod sparse;
pub mod verify;

pub use error::{KornError, Result};
