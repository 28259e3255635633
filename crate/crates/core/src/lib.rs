//! Gauss–Hermite product cubature for the standard Gaussian measure on `R^s`
//! and exact worst-case errors in weighted Hermite spaces.

pub mod error;
pub mod gauss_hermite;
pub mod hermite;
pub mod hermite_space;
pub mod json;
pub mod lower_bounds;
pub mod rule_builder;
pub mod testfns;
pub mod wce;

pub use error::{Error, Result};
