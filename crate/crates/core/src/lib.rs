//! Band structure, asymptotic gap prediction and Brillouin-zone gap scanning
//! for the 2D periodic operator `-Δ + ε^α L + ε^{-3/2} V_ε` with narrow walls
//! along the lines `x₂ ∈ a2·ℤ`.

// NaN inputs must fail these checks, so negated comparisons are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch1d;
pub mod bloch2d;
pub mod cli;
pub mod crossings;
pub mod error;
pub mod gapscan;
pub mod model;
pub mod numerics;
pub mod predictor;

pub use error::{Error, Result};
