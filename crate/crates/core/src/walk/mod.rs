//! Direct simulation of the walk with checkpointed observations.

mod dump;
mod exact;
mod state;

pub use dump::{read_trajectory, write_trajectory, TrajectoryHeader, TRAJECTORY_MAGIC, TRAJECTORY_VERSION};
pub use exact::{exact_small_n_pmf, EXACT_MAX_N, EXACT_MAX_SUPPORT};
pub use state::{conditional_step_law, WalkState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, StepDistribution};
use crate::rng;

/// Auto mode uses counts storage for discrete laws with at most this many points.
pub const AUTO_COUNTS_MAX_SUPPORT: usize = 64;

/// Upper bound on stored history values (d · horizon) in full mode: 2 GiB of f64.
pub const MAX_FULL_HISTORY: u64 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WalkMode {
    Full,
    Counts,
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Geometric { start: u64, ratio: f64 },
    Explicit(Vec<u64>),
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Geometric { start: 64, ratio: 2.0 }
    }
}

impl Schedule {
    /// Strictly increasing checkpoint times in [1, horizon], always ending at the horizon.
    pub fn times(&self, horizon: u64) -> Result<Vec<u64>> {
        let mut out = Vec::new();
        match self {
            Schedule::Geometric { start, ratio } => {
                if !(*ratio > 1.0) || *start == 0 {
                    return Err(Error::InvalidParameter(format!(
                        "geometric schedule needs start ≥ 1 and ratio > 1, got {start}, {ratio}"
                    )));
                }
                let mut t = *start as f64;
                while t.round() < horizon as f64 {
                    let k = t.round() as u64;
                    if out.last().is_none_or(|&last| k > last) {
                        out.push(k);
                    }
                    t *= ratio;
                }
            }
            Schedule::Explicit(list) => {
                for &k in list {
                    if k == 0 {
                        return Err(Error::InvalidParameter("checkpoint time 0".into()));
                    }
                    if out.last().is_some_and(|&last| k <= last) {
                        return Err(Error::InvalidParameter(
                            "explicit checkpoints must be strictly increasing".into(),
                        ));
                    }
                    if k < horizon {
                        out.push(k);
                    }
                }
            }
        }
        out.push(horizon);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub params: ModelParams,
    pub dist: StepDistribution,
    pub horizon: u64,
    #[serde(default)]
    pub schedule: Schedule,
    pub seed: u64,
    #[serde(default)]
    pub mode: WalkMode,
    #[serde(default)]
    pub retain_trajectory: bool,
}

impl WalkConfig {
    pub fn new(alpha: f64, dist: StepDistribution, horizon: u64, seed: u64) -> Result<Self> {
        let params = ModelParams::new(alpha, dist.dim())?;
        Ok(Self {
            params,
            dist,
            horizon,
            schedule: Schedule::default(),
            seed,
            mode: WalkMode::Auto,
            retain_trajectory: false,
        })
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_mode(mut self, mode: WalkMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn retaining_trajectory(mut self) -> Self {
        self.retain_trajectory = true;
        self
    }

    /// Full or counts, after resolving auto.
    pub fn effective_mode(&self) -> WalkMode {
        match self.mode {
            WalkMode::Auto => {
                if self.dist.is_discrete()
                    && self.dist.support_points().len() <= AUTO_COUNTS_MAX_SUPPORT
                {
                    WalkMode::Counts
                } else {
                    WalkMode::Full
                }
            }
            m => m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.params.d != self.dist.dim() {
            return Err(Error::InvalidParameter(format!(
                "params.d = {} but the distribution lives in dimension {}",
                self.params.d,
                self.dist.dim()
            )));
        }
        ModelParams::new(self.params.alpha, self.params.d)?;
        self.schedule.times(self.horizon)?;
        match self.effective_mode() {
            WalkMode::Counts if !self.dist.is_discrete() => Err(Error::InvalidParameter(
                "counts mode requires a discrete distribution".into(),
            )),
            WalkMode::Full if self.horizon.saturating_mul(self.dist.dim() as u64) > MAX_FULL_HISTORY => {
                Err(Error::InvalidParameter(format!(
                    "full-mode history of {} steps in dimension {} exceeds the cap of {MAX_FULL_HISTORY} values",
                    self.horizon,
                    self.dist.dim()
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Something evaluated along a walk. Per-step hooks run only when
/// [`Observer::per_step`] is true.
pub trait Observer {
    /// Column names of the values returned at each checkpoint.
    fn columns(&self) -> Vec<String>;

    fn per_step(&self) -> bool {
        false
    }

    fn on_step(&mut self, _n: u64, _step: &[f64], _position: &[f64]) {}

    fn at_checkpoint(&mut self, n: u64, position: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub n: u64,
    pub position: Vec<f64>,
    pub norm: f64,
    /// max_{k ≤ n} ‖S_k‖.
    pub max_norm: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSeries {
    pub d: usize,
    pub columns: Vec<String>,
    pub records: Vec<CheckpointRecord>,
    /// Set when ‖S_n‖ left the floating range; records stop before that time.
    pub overflow: bool,
    /// Steps X_1..X_n, d values each, when retained.
    pub trajectory: Option<Vec<f64>>,
}

impl CheckpointSeries {
    pub fn last(&self) -> &CheckpointRecord {
        self.records.last().expect("at least one checkpoint")
    }

    pub fn at(&self, n: u64) -> Option<&CheckpointRecord> {
        self.records.iter().find(|r| r.n == n)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn times(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.n).collect()
    }
}

/// Runs one walk to the horizon. The output is a deterministic function of the config.
pub fn run_walk(config: &WalkConfig, observers: &mut [Box<dyn Observer + '_>]) -> Result<CheckpointSeries> {
    config.validate()?;
    let dist = &config.dist;
    let alpha = config.params.alpha;
    let d = dist.dim();
    let times = config.schedule.times(config.horizon)?;
    let counts_mode = config.effective_mode() == WalkMode::Counts;
    let mut state = if counts_mode {
        WalkState::counts(dist)
    } else {
        WalkState::full_with_capacity(d, config.horizon as usize)
    };
    let mut rng = rng::stream(config.seed);
    let mut columns = Vec::new();
    for o in observers.iter() {
        columns.extend(o.columns());
    }
    let stepping: Vec<usize> = (0..observers.len()).filter(|&i| observers[i].per_step()).collect();
    let mut trajectory = config
        .retain_trajectory
        .then(|| Vec::with_capacity(config.horizon as usize * d));
    let mut records = Vec::with_capacity(times.len());
    let mut max_sq: f64 = 0.0;
    let mut overflow = false;
    let mut next = 0;

    while state.n() < config.horizon {
        let step = state.advance(alpha, dist, &mut rng);
        if let Some(t) = trajectory.as_mut() {
            t.extend_from_slice(step);
        }
        let n = state.n();
        let sq: f64 = state.position().iter().map(|x| x * x).sum();
        if !sq.is_finite() {
            overflow = true;
            break;
        }
        max_sq = max_sq.max(sq);
        for &i in &stepping {
            observers[i].on_step(n, state.last_step(), state.position());
        }
        if n == times[next] {
            if counts_mode {
                state.resync(dist);
            }
            let position = state.position().to_vec();
            let mut values = Vec::with_capacity(columns.len());
            for o in observers.iter_mut() {
                values.extend(o.at_checkpoint(n, &position));
            }
            let norm = position.iter().map(|x| x * x).sum::<f64>().sqrt();
            records.push(CheckpointRecord {
                n,
                position,
                norm,
                max_norm: max_sq.sqrt().max(norm),
                values,
            });
            next += 1;
        }
    }

    Ok(CheckpointSeries { d, columns, records, overflow, trajectory })
}
