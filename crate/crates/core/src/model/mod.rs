//! Step distributions, model parameters and the linear reductions applied before simulation.

mod dist;
pub mod grammar;
mod linalg;

pub use dist::{DistKind, StepDistribution, MAX_SUPPORT, PROBABILITY_SUM_TOLERANCE};
pub use linalg::{
    genuine_dimension, whiten, whitening_from_covariance, whitening_map, GenuineDimension,
    WhiteningMap, RANK_TOLERANCE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reinforcement parameter α and ambient dimension d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub d: usize,
}

impl ModelParams {
    pub fn new(alpha: f64, d: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self { alpha, d })
    }

    /// Long-run statements only hold for α < 1.
    pub fn is_statistical(&self) -> bool {
        self.alpha < 1.0
    }
}

/// α for the k-direction elephant walk with memory parameter p.
pub fn erw_alpha(p: f64, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 directions, got {k}")));
    }
    let kf = k as f64;
    if !(p >= 1.0 / kf - 1e-15 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "memory parameter p = {p} outside [1/{k}, 1]; negative reinforcement is not supported"
        )));
    }
    Ok(((kf * p - 1.0) / (kf - 1.0)).max(0.0))
}

/// Inverse of [`erw_alpha`].
pub fn erw_memory(alpha: f64, k: usize) -> f64 {
    let kf = k as f64;
    ((kf - 1.0) * alpha + 1.0) / kf
}

/// Conditional law of the next direction given the counts N_n(v) of past steps:
/// P(v) = α N_n(v)/n + (1 − α)/k.
pub fn erw_step_probability(counts: &[u64], n: u64, alpha: f64) -> Result<Vec<f64>> {
    let k = counts.len();
    if k == 0 {
        return Err(Error::InvalidParameter("no directions".into()));
    }
    let total: u64 = counts.iter().sum();
    if n == 0 || total != n {
        return Err(Error::InvalidParameter(format!(
            "counts sum to {total} but n = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let nf = n as f64;
    let base = (1.0 - alpha) / k as f64;
    Ok(counts.iter().map(|&c| alpha * c as f64 / nf + base).collect())
}
