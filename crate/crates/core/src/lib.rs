//! Orlicz–Zygmund norm machinery and a discrete solver for
//! `div A(x, grad u) = div f` on the unit square, with a harness that checks
//! the associated existence, uniqueness and stability estimates numerically.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimates;
pub mod grid;
pub mod hodge;
pub mod io;
pub mod linalg;
pub mod norms;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Grid, ScalarField, VectorField};
pub use norms::{Magnitudes, NormReport, ZygmundParams};
