//! Explicit translation-invariant point processes on `Z^d` whose first two
//! correlation functions are `ρ` and `ρ² g^(α)`, together with the bounds on
//! the maximal realizable density.
//!
//! - [`lattice`]: `g^(α)`, the structure function, variance and Yamada checks.
//! - [`basic1d`]: one-dimensional block-factor processes, their exact
//!   enumeration oracle and a numerical synthesizer.
//! - [`product`]: the sitewise product of `d` axis-aligned families.
//! - [`bounds`]: closed-form and numerical density bounds.
//! - [`montecarlo`]: replica-batched correlation estimates.

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basic1d;
pub mod bounds;
#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod format;
pub mod lattice;
pub mod montecarlo;
pub mod product;
pub mod rng;

pub use error::{Error, Result};
