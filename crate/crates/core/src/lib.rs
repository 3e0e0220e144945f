//! Numerical laboratory for Heisenberg nilflows.
//!
//! The crate realizes the flow on the compact Heisenberg nilmanifold
//! `M = Γ_K \ Heis`, its linear skew-shift return map to the transverse torus,
//! quadratic Weyl (theta) sums, the renormalization flow on frames, the
//! Stone–von Neumann line model, Monte-Carlo limit-distribution and
//! sublevel-set experiments, and smooth time changes of the nilflow.
//!
//! Everything that loops over samples or summation indices goes through
//! [`par`], which splits work into fixed chunks and joins the partial results
//! with a fixed binary tree, so results do not depend on the thread count or on
//! whether the `parallel` feature is enabled.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod birkhoff;
pub mod error;
pub mod heis;
pub mod io;
pub mod line_model;
pub mod moduli;
pub mod par;
pub mod phase;
pub mod quad;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod sum;
pub mod timechange;

pub use error::{Error, Result};
pub use heis::{Frame, GroupElement, Lattice, SkewShiftParams};
pub use num_complex::Complex64;

/// Library version embedded in experiment summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
