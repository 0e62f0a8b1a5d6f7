//! Computational tools for irregular sets of dynamical systems.
//!
//! The crate builds explicit points whose weighted Birkhoff averages fail to
//! converge, certifies horseshoes and entropy bounds for interval maps,
//! estimates dimensions of self-similar sets, and implements the geometric
//! Lorenz model and skew products over the shift.

// negated float comparisons are how NaN parameters get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dimension;
pub mod error;
pub mod exact;
pub mod interval;
pub mod irregular;
pub mod lorenz;
mod perron;
pub mod skewprod;
pub mod symbolic;

pub use error::{Error, Result};
