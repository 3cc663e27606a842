//! Simulation and diagnostics for the step-reinforced random walk on R^d.
//!
//! At each step the walk repeats a uniformly chosen past step with probability α
//! and otherwise draws a fresh step from μ.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forest;
pub mod harness;
pub mod lemma;
pub mod model;
pub mod pmf;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{Error, ParseError, Result};
