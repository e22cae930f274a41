//! Numerics for self-similar gradient blowup in the co-rotational Skyrme
//! model in 5+1 dimensions.
//!
//! The crate evaluates the closed-form blowup profile, evolves the physical
//! and similarity-coordinate equations, computes the spectrum of the
//! linearized generator, and measures blowup and decay rates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod model;
pub mod par;
pub mod physical;
pub mod profile;
pub mod similarity;
pub mod spectral;

pub use error::{Error, Result};
pub use par::Execution;
