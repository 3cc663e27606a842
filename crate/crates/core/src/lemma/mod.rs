//! Numerical certification of the deterministic Taylor-drift inequalities
//! satisfied by the Lyapunov functions L, f and h.
//!
//! Each check evaluates both sides at a stratified sample of (x, y) pairs and
//! reports the largest signed slack LHS − RHS. Excesses below
//! `1e-12 · (|LHS| + |RHS|)` count as rounding noise.

mod functions;
mod sampler;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use functions::{
    in_e_eps, inverse_power_rhs, sqrt_abs_rhs, sqrt_log_global_rhs, sqrt_log_local_rhs, LyapunovFn,
};
pub use sampler::Sampler;

use crate::error::{Error, Result};
use crate::rng::{cell_id, replica_stream};

pub const NOISE_TOLERANCE: f64 = 1e-12;

/// Samples per independent stream; fixed so results do not depend on the thread count.
const CHUNK: usize = 1 << 14;

/// The inequalities that can be certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum Inequality {
    /// L(x+y) − L(x) ≤ √|x|(y/2x − y²/10x² + C y² 1{|y|>ε|x|}/x²).
    SqrtAbs,
    /// f(x+y) − f(x) ≤ 1 + ‖y‖/‖x‖ for all x ≠ 0.
    SqrtLogGlobal,
    /// Second-order bound on f for ‖x‖ ≥ r, y ∈ E_ε(x).
    SqrtLogLocal,
    /// Second-order bound on h for ‖x‖ ≥ r, y ∈ E_ε(x), in dimension d.
    InversePower { delta: f64, d: usize },
}

impl Inequality {
    pub fn name(&self) -> &'static str {
        match self {
            Inequality::SqrtAbs => "sqrt-abs",
            Inequality::SqrtLogGlobal => "sqrt-log-global",
            Inequality::SqrtLogLocal => "sqrt-log-local",
            Inequality::InversePower { .. } => "inverse-power",
        }
    }

    pub fn uses_radius(&self) -> bool {
        matches!(self, Inequality::SqrtLogLocal | Inequality::InversePower { .. })
    }

    pub fn uses_constant(&self) -> bool {
        !matches!(self, Inequality::SqrtLogGlobal)
    }

    pub fn dim(&self) -> usize {
        match *self {
            Inequality::SqrtAbs => 1,
            Inequality::SqrtLogGlobal | Inequality::SqrtLogLocal => 2,
            Inequality::InversePower { d, .. } => d,
        }
    }

    fn stream_key(&self) -> String {
        format!("lemma:{}:d={}", self.name(), self.dim())
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Inequality::InversePower { delta, d } => write!(f, "inverse-power(delta={delta}, d={d})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub epsilon: f64,
    pub r: Option<f64>,
    pub c: Option<f64>,
}

/// Outcome of one certification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationResult {
    pub inequality: Inequality,
    pub constants: Constants,
    /// Exponent p of the prefactor −δ/(4‖x‖^p); only for the h bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefactor_exponent: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    /// max(LHS − RHS) over the sample; negative means every point holds with room.
    pub max_violation: f64,
    pub worst_x: Vec<f64>,
    pub worst_y: Vec<f64>,
    pub worst_lhs: f64,
    pub worst_rhs: f64,
    /// Points whose excess over the noise tolerance is positive.
    pub violations: usize,
    pub pass: bool,
}

impl CertificationResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Largest ε with √(1+t) − 1 ≤ t/2 − t²/10 on [−ε, ε], by bisection to 1e-12.
/// The bracket's lower end is returned, so the inequality holds at ε itself.
pub fn taylor_radius() -> f64 {
    let phi = |t: f64| (1.0 + t).sqrt() - 1.0 - t / 2.0 + t * t / 10.0;
    // φ < 0 on (−1, 0) and on (0, ε); the sign change is in (0.1, 1).
    let (mut lo, mut hi) = (0.1, 1.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// ε from [`taylor_radius`] and C = ε^{−3/2}.
pub fn proof_constants_l() -> (f64, f64) {
    let eps = taylor_radius();
    (eps, eps.powf(-1.5))
}

#[derive(Clone, Copy)]
struct Worst {
    index: usize,
    violation: f64,
    lhs: f64,
    rhs: f64,
    violations: usize,
}

fn run<F>(ineq: Inequality, sampler: &Sampler, eval: F) -> (Worst, Vec<f64>, Vec<f64>)
where
    F: Fn(&mut crate::rng::Stream, usize) -> (Vec<f64>, Vec<f64>, f64, f64) + Sync,
{
    let cell = cell_id(&ineq.stream_key());
    let chunks = sampler.samples.div_ceil(CHUNK);
    let per_chunk: Vec<(Worst, Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = replica_stream(sampler.seed, cell, k as u64);
            let mut best: Option<(Worst, Vec<f64>, Vec<f64>)> = None;
            let mut violations = 0;
            let end = ((k + 1) * CHUNK).min(sampler.samples);
            for i in k * CHUNK..end {
                let (x, y, lhs, rhs) = eval(&mut rng, i % sampler::STRATA);
                let v = lhs - rhs;
                if v > NOISE_TOLERANCE * (lhs.abs() + rhs.abs()) || v.is_nan() {
                    violations += 1;
                }
                let v = if v.is_nan() { f64::INFINITY } else { v };
                if best.as_ref().is_none_or(|b| v > b.0.violation) {
                    let w = Worst { index: i, violation: v, lhs, rhs, violations: 0 };
                    best = Some((w, x, y));
                }
            }
            let mut b = best.expect("nonempty chunk");
            b.0.violations = violations;
            b
        })
        .collect();
    let total: usize = per_chunk.iter().map(|b| b.0.violations).sum();
    let mut worst = per_chunk
        .into_iter()
        .reduce(|a, b| if b.0.violation > a.0.violation { b } else { a })
        .expect("at least one sample");
    worst.0.violations = total;
    worst
}

fn finish(
    ineq: Inequality,
    constants: Constants,
    prefactor_exponent: Option<f64>,
    sampler: &Sampler,
    (w, x, y): (Worst, Vec<f64>, Vec<f64>),
) -> CertificationResult {
    debug_assert!(w.index < sampler.samples);
    CertificationResult {
        inequality: ineq,
        constants,
        prefactor_exponent,
        samples: sampler.samples,
        seed: sampler.seed,
        max_violation: w.violation,
        worst_x: x,
        worst_y: y,
        worst_lhs: w.lhs,
        worst_rhs: w.rhs,
        violations: w.violations,
        pass: w.violations == 0,
    }
}

fn check_sampler(sampler: &Sampler) -> Result<()> {
    if sampler.samples == 0 {
        return Err(Error::InvalidParameter("certification needs at least one sample".into()));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be finite and > 1, got {r}")));
    }
    Ok(())
}

pub fn check_l_inequality(epsilon: f64, c: f64, sampler: &Sampler) -> Result<CertificationResult> {
    check_epsilon(epsilon)?;
    check_sampler(sampler)?;
    if !(c > 1.0) {
        return Err(Error::InvalidParameter(format!("C must exceed 1, got {c}")));
    }
    let ineq = Inequality::SqrtAbs;
    let out = run(ineq, sampler, |rng, s| {
        let (x, y) = sampler::line_point(rng, s, epsilon);
        let lhs = LyapunovFn::SqrtAbs.increment(&[x], &[y]);
        (vec![x], vec![y], lhs, sqrt_abs_rhs(x, y, epsilon, c))
    });
    let constants = Constants { epsilon, r: None, c: Some(c) };
    Ok(finish(ineq, constants, None, sampler, out))
}

/// The global bound 1 + ‖y‖/‖x‖ and the second-order bound, certified separately.
pub fn check_f_inequalities(
    epsilon: f64,
    r: f64,
    c: f64,
    sampler: &Sampler,
) -> Result<(CertificationResult, CertificationResult)> {
    Ok((check_f_global(sampler)?, check_f_local(epsilon, r, c, sampler)?))
}

pub fn check_f_global(sampler: &Sampler) -> Result<CertificationResult> {
    check_sampler(sampler)?;
    let ineq = Inequality::SqrtLogGlobal;
    let out = run(ineq, sampler, |rng, s| {
        let (x, y) = sampler::global_point(rng, s, 2);
        let lhs = LyapunovFn::SqrtLog.increment(&x, &y);
        let rhs = sqrt_log_global_rhs(&x, &y);
        (x, y, lhs, rhs)
    });
    let constants = Constants { epsilon: 0.0, r: None, c: None };
    Ok(finish(ineq, constants, None, sampler, out))
}

pub fn check_f_local(epsilon: f64, r: f64, c: f64, sampler: &Sampler) -> Result<CertificationResult> {
    check_epsilon(epsilon)?;
    check_radius(r)?;
    check_sampler(sampler)?;
    let ineq = Inequality::SqrtLogLocal;
    let out = run(ineq, sampler, |rng, s| {
        let (x, y) = sampler::local_point(rng, s, 2, r, epsilon);
        let lhs = LyapunovFn::SqrtLog.increment(&x, &y);
        let rhs = sqrt_log_local_rhs(&x, &y, epsilon, c);
        (x, y, lhs, rhs)
    });
    let constants = Constants { epsilon, r: Some(r), c: Some(c) };
    Ok(finish(ineq, constants, None, sampler, out))
}

/// The h bound with the prefactor exponent 2 + δ/4 from the Taylor expansion.
pub fn check_h_inequality(
    delta: f64,
    d: usize,
    epsilon: f64,
    r: f64,
    c: f64,
    sampler: &Sampler,
) -> Result<CertificationResult> {
    check_h_inequality_with_prefactor(delta, d, epsilon, r, c, 2.0 + delta / 4.0, sampler)
}

/// The h bound with prefactor −δ/(4‖x‖^p) for a caller-chosen p.
pub fn check_h_inequality_with_prefactor(
    delta: f64,
    d: usize,
    epsilon: f64,
    r: f64,
    c: f64,
    p: f64,
    sampler: &Sampler,
) -> Result<CertificationResult> {
    check_epsilon(epsilon)?;
    check_radius(r)?;
    check_sampler(sampler)?;
    if d < 3 {
        return Err(Error::InvalidParameter(format!("h needs d >= 3, got {d}")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let ineq = Inequality::InversePower { delta, d };
    let h = LyapunovFn::InversePower { delta };
    let out = run(ineq, sampler, |rng, s| {
        let (x, y) = sampler::local_point(rng, s, d, r, epsilon);
        let lhs = h.increment(&x, &y);
        let rhs = inverse_power_rhs(&x, &y, delta, epsilon, c, p);
        (x, y, lhs, rhs)
    });
    let constants = Constants { epsilon, r: Some(r), c: Some(c) };
    Ok(finish(ineq, constants, Some(p), sampler, out))
}

/// Runs the check for one inequality at the given constants. `r` and `c` are
/// ignored where the inequality has no such constant.
pub fn certify(
    ineq: Inequality,
    epsilon: f64,
    r: f64,
    c: f64,
    sampler: &Sampler,
) -> Result<CertificationResult> {
    match ineq {
        Inequality::SqrtAbs => check_l_inequality(epsilon, c, sampler),
        Inequality::SqrtLogGlobal => check_f_global(sampler),
        Inequality::SqrtLogLocal => check_f_local(epsilon, r, c, sampler),
        Inequality::InversePower { delta, d } => check_h_inequality(delta, d, epsilon, r, c, sampler),
    }
}

/// Candidate radii and constants for [`find_constants`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub r: Vec<f64>,
    pub c: Vec<f64>,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            r: vec![1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1e3, 1e4],
            c: vec![1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1e3, 1e4],
        }
    }
}

/// Every grid point failed. Holds one result per tried point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchExhausted {
    pub inequality: Inequality,
    pub epsilon: f64,
    pub attempts: Vec<CertificationResult>,
}

impl fmt::Display for SearchExhausted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "no admissible constants for {} at epsilon={}", self.inequality, self.epsilon)?;
        for a in &self.attempts {
            writeln!(
                f,
                "  r={:?} C={:?}: max violation {:e} at x={:?} y={:?}",
                a.constants.r, a.constants.c, a.max_violation, a.worst_x, a.worst_y
            )?;
        }
        Ok(())
    }
}

impl std::error::Error for SearchExhausted {}

/// Smallest admissible grid point, ordered by r and then by C.
pub fn find_constants(
    ineq: Inequality,
    epsilon: f64,
    grid: &SearchGrid,
    sampler: &Sampler,
) -> Result<std::result::Result<CertificationResult, SearchExhausted>> {
    let sorted = |v: &[f64], used: bool| -> Result<Vec<f64>> {
        if !used {
            return Ok(vec![f64::NAN]);
        }
        if v.is_empty() {
            return Err(Error::InvalidParameter("search grid is empty".into()));
        }
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        Ok(v)
    };
    let rs = sorted(&grid.r, ineq.uses_radius())?;
    let cs = sorted(&grid.c, ineq.uses_constant())?;
    let mut attempts = Vec::new();
    for &r in &rs {
        for &c in &cs {
            let res = certify(ineq, epsilon, r, c, sampler)?;
            if res.pass {
                return Ok(Ok(res));
            }
            attempts.push(res);
        }
    }
    Ok(Err(SearchExhausted { inequality: ineq, epsilon, attempts }))
}

/// ε used for the E_ε-restricted inequalities in [`certification_suite`].
pub const SUITE_EPSILON_F: f64 = 1.0 / 16.0;
pub const SUITE_EPSILON_H: f64 = 0.125;

/// Outcome of [`certification_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    /// The L inequality at the Taylor radius with C = ε^{−3/2}.
    pub proof_constants: CertificationResult,
    /// One entry per inequality: the witness found, or every failed attempt.
    pub searches: Vec<std::result::Result<CertificationResult, SearchExhausted>>,
    pub pass: bool,
}

/// Certifies every inequality: the L proof constants directly, then a grid
/// search for L, f (global and local) and h with δ = 1 in each of `h_dims`.
pub fn certification_suite(h_dims: &[usize], grid: &SearchGrid, sampler: &Sampler) -> Result<SuiteReport> {
    let (eps_l, c_l) = proof_constants_l();
    let proof_constants = check_l_inequality(eps_l, c_l, sampler)?;
    let mut jobs = vec![
        (Inequality::SqrtAbs, eps_l),
        (Inequality::SqrtLogGlobal, SUITE_EPSILON_F),
        (Inequality::SqrtLogLocal, SUITE_EPSILON_F),
    ];
    jobs.extend(h_dims.iter().map(|&d| (Inequality::InversePower { delta: 1.0, d }, SUITE_EPSILON_H)));
    let searches = jobs
        .into_iter()
        .map(|(ineq, eps)| find_constants(ineq, eps, grid, sampler))
        .collect::<Result<Vec<_>>>()?;
    let pass = proof_constants.pass && searches.iter().all(|s| s.is_ok());
    Ok(SuiteReport { proof_constants, searches, pass })
}
