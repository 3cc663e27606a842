use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StepDistribution;
use crate::walk::{Observer, WalkState, AUTO_COUNTS_MAX_SUPPORT, MAX_FULL_HISTORY};

/// Default ball radius: 1 for integer-valued steps, else 2√(E‖X‖²).
pub fn default_radius(dist: &StepDistribution) -> f64 {
    let lattice = dist
        .atoms()
        .is_some_and(|a| a.iter().all(|(v, _)| v.iter().all(|x| x.fract() == 0.0)));
    if lattice {
        1.0
    } else {
        2.0 * dist.second_moment().unwrap_or(1.0).sqrt()
    }
}

/// Counts entries into the closed ball B(0, r) that follow an excursion beyond 2r.
/// The walk starts at 0, inside the ball, so the first return needs a prior exit past 2r.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnCounter {
    r: f64,
    armed: bool,
    returns: u64,
    liminf_from: u64,
    liminf: f64,
    visits: Option<BTreeMap<Vec<i64>, u64>>,
}

impl ReturnCounter {
    /// `liminf_from`: the minimum of ‖S_k‖ is tracked for k ≥ this time.
    pub fn new(r: f64, liminf_from: u64) -> Self {
        Self {
            r,
            armed: false,
            returns: 0,
            liminf_from,
            liminf: f64::INFINITY,
            visits: None,
        }
    }

    /// Also count visits to each integer site inside the ball.
    pub fn with_site_visits(mut self) -> Self {
        self.visits = Some(BTreeMap::new());
        self
    }

    pub fn returns(&self) -> u64 {
        self.returns
    }

    pub fn liminf(&self) -> f64 {
        self.liminf
    }

    pub fn visits(&self) -> Option<&BTreeMap<Vec<i64>, u64>> {
        self.visits.as_ref()
    }

    pub fn observe(&mut self, n: u64, position: &[f64]) {
        let norm = position.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 2.0 * self.r {
            self.armed = true;
        } else if norm <= self.r {
            if self.armed {
                self.returns += 1;
                self.armed = false;
            }
            if let Some(v) = self.visits.as_mut() {
                if position.iter().all(|x| x.fract() == 0.0) {
                    let site = position.iter().map(|&x| x as i64).collect();
                    *v.entry(site).or_insert(0) += 1;
                }
            }
        }
        if n >= self.liminf_from {
            self.liminf = self.liminf.min(norm);
        }
    }
}

impl Observer for ReturnCounter {
    fn columns(&self) -> Vec<String> {
        vec!["returns".into(), "liminf".into()]
    }

    fn per_step(&self) -> bool {
        true
    }

    fn on_step(&mut self, n: u64, _step: &[f64], position: &[f64]) {
        self.observe(n, position);
    }

    fn at_checkpoint(&mut self, _n: u64, _position: &[f64]) -> Vec<f64> {
        let liminf = if self.liminf.is_finite() { self.liminf } else { -1.0 };
        vec![self.returns as f64, liminf]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceStats {
    pub returns: u64,
    /// min ‖S_k‖ over the final half n/2 ≤ k ≤ n.
    pub liminf_proxy: f64,
    /// Visits per integer site of B(0, r), for integer-valued walks.
    pub site_visits: Vec<(Vec<i64>, u64)>,
}

/// Return count, liminf proxy and site visits along a retained trajectory.
pub fn recurrence_stats(steps: &[f64], d: usize, r: f64) -> Result<RecurrenceStats> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    if d == 0 || steps.is_empty() || !steps.len().is_multiple_of(d) {
        return Err(Error::InvalidParameter("trajectory is not a whole number of steps".into()));
    }
    let n = (steps.len() / d) as u64;
    let mut c = ReturnCounter::new(r, n.div_ceil(2)).with_site_visits();
    let mut pos = vec![0.0; d];
    for (k, x) in steps.chunks_exact(d).enumerate() {
        for (p, s) in pos.iter_mut().zip(x) {
            *p += s;
        }
        c.observe(k as u64 + 1, &pos);
    }
    Ok(RecurrenceStats {
        returns: c.returns,
        liminf_proxy: c.liminf,
        site_visits: c.visits.unwrap_or_default().into_iter().collect(),
    })
}

/// Default cap on the simulated steps per exit-time walk.
pub const EXIT_SAFETY_HORIZON: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitTimes {
    pub radii: Vec<f64>,
    /// ζ_R per radius; `None` if the walk stayed inside B(0, R) up to the cap.
    pub times: Vec<Option<u64>>,
    pub horizon: u64,
}

/// ζ_R = inf{n ≥ 0 : ‖S_n‖ ≥ R} for every radius, from one walk. The cap is
/// lowered to the full-mode history limit for laws that cannot use counts mode.
pub fn exit_times<R: Rng + ?Sized>(
    alpha: f64,
    dist: &StepDistribution,
    radii: &[f64],
    safety_horizon: u64,
    rng: &mut R,
) -> Result<ExitTimes> {
    if radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::InvalidParameter("radii must be nonnegative".into()));
    }
    let counts = dist.is_discrete() && dist.atoms().is_some_and(|a| a.len() <= AUTO_COUNTS_MAX_SUPPORT);
    let horizon = if counts {
        safety_horizon
    } else {
        safety_horizon.min(MAX_FULL_HISTORY / dist.dim() as u64)
    };
    let mut state = if counts { WalkState::counts(dist) } else { WalkState::full(dist.dim()) };
    let mut times: Vec<Option<u64>> = radii.iter().map(|&r| (r == 0.0).then_some(0)).collect();
    let mut pending = times.iter().filter(|t| t.is_none()).count();
    while pending > 0 && state.n() < horizon {
        state.advance(alpha, dist, rng);
        let sq: f64 = state.position().iter().map(|x| x * x).sum();
        for (t, &r) in times.iter_mut().zip(radii) {
            if t.is_none() && sq >= r * r {
                *t = Some(state.n());
                pending -= 1;
            }
        }
    }
    Ok(ExitTimes { radii: radii.to_vec(), times, horizon })
}
