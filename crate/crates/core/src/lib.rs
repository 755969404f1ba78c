//! Bound-state problems on winding complex contours.

// `!(a > b)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(feature = "cli")]
pub mod cli;
pub mod contour;
pub mod descriptor;
pub mod error;
pub mod integrator;
pub mod io;
pub mod models;
pub mod rectify;
pub mod schrod;

pub use error::{Error, Result};
