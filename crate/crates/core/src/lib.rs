//! Differentiable mappings from `Rⁿ` onto the rotation group SO(3).
//!
//! [`mappings`] holds the mappings, their exact Jacobians and right inverses.
//! [`losses`] and [`nn`] turn them into regression heads of small dense
//! networks, [`checks`] verifies their numerical properties and
//! [`experiments`] runs desk-scale comparisons that write CSV reports.

pub mod checks;
pub mod cli;
pub mod dual;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod losses;
pub mod mappings;
pub mod nn;
pub mod rng;
pub mod so3;
pub mod tol;

pub use error::{Error, Result};
