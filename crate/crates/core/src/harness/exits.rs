use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{whiten, StepDistribution};
use crate::rng::{cell_id, replica_stream};
use crate::stats::exit_times;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitRow {
    pub radius: f64,
    /// Sample mean of ζ_R. Censored replicas enter at the horizon.
    pub mean: f64,
    pub mean_over_r2: f64,
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitScaling {
    pub alpha: f64,
    pub dist: String,
    pub replicas: u64,
    pub horizon: u64,
    pub rows: Vec<ExitRow>,
    /// max/min of mean ζ_R/R² over the radii.
    pub ratio: f64,
    pub max_ratio: f64,
    /// ratio < max_ratio and no replica censored.
    pub pass: bool,
}

/// Settings for [`exit_time_scaling`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitSettings {
    pub radii: Vec<f64>,
    pub replicas: u64,
    /// Cap on the walk length; replicas still inside at the cap are censored.
    pub horizon: u64,
    pub max_ratio: f64,
    pub seed: u64,
}

impl Default for ExitSettings {
    fn default() -> Self {
        Self { radii: vec![10.0, 20.0, 40.0, 80.0], replicas: 1000, horizon: 100_000_000, max_ratio: 3.0, seed: 0 }
    }
}

/// Mean exit time from B(0, R) over replicas, scaled by R². Each replica
/// records every radius from a single walk.
pub fn exit_time_scaling(
    alpha: f64,
    dist: &StepDistribution,
    whitened: bool,
    s: &ExitSettings,
) -> Result<ExitScaling> {
    let (radii, replicas, horizon, seed, max_ratio) = (&s.radii[..], s.replicas, s.horizon, s.seed, s.max_ratio);
    if radii.is_empty() || radii.iter().any(|&r| r.is_nan() || r <= 0.0) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    if replicas == 0 {
        return Err(Error::InvalidParameter("need at least one replica".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let law = if whitened { whiten(dist)?.1 } else { dist.clone() };
    let cell = cell_id(&format!("exit:alpha={alpha},dist={law},radii={radii:?}"));
    let runs = (0..replicas)
        .into_par_iter()
        .map(|i| exit_times(alpha, &law, radii, horizon, &mut replica_stream(seed, cell, i)))
        .collect::<Result<Vec<_>>>()?;
    let cap = runs.first().map_or(horizon, |r| r.horizon);
    let rows: Vec<ExitRow> = radii
        .iter()
        .enumerate()
        .map(|(k, &radius)| {
            let times: Vec<Option<u64>> = runs.iter().map(|r| r.times[k]).collect();
            let censored = times.iter().filter(|t| t.is_none()).count();
            let mean = times.iter().map(|t| t.unwrap_or(cap) as f64).sum::<f64>() / replicas as f64;
            ExitRow { radius, mean, mean_over_r2: mean / (radius * radius), censored }
        })
        .collect();
    let scaled = rows.iter().map(|r| r.mean_over_r2);
    let hi = scaled.clone().fold(f64::NEG_INFINITY, f64::max);
    let lo = scaled.fold(f64::INFINITY, f64::min);
    let ratio = hi / lo;
    let pass = ratio < max_ratio && rows.iter().all(|r| r.censored == 0);
    Ok(ExitScaling {
        alpha,
        dist: law.to_string(),
        replicas,
        horizon: cap,
        rows,
        ratio,
        max_ratio,
        pass,
    })
}
