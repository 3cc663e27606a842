use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StepDistribution;
use crate::walk::Observer;

use super::functional::FunctionalSpec;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Δ_n(h) = (1/n) Σ_{i ≤ n} h(X_i) − E h(X_1) at each requested time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSeries {
    pub name: String,
    pub ns: Vec<u64>,
    pub values: Vec<f64>,
    pub warning: Option<String>,
}

fn check_trajectory(steps: &[f64], d: usize) -> Result<u64> {
    if d == 0 || !steps.len().is_multiple_of(d) || steps.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "trajectory of {} values is not a whole number of steps in dimension {d}",
            steps.len()
        )));
    }
    Ok((steps.len() / d) as u64)
}

/// Δ_n(h) along a retained trajectory (row-major steps of dimension d).
pub fn delta_n(spec: &FunctionalSpec, steps: &[f64], d: usize, ns: &[u64]) -> Result<DeltaSeries> {
    let len = check_trajectory(steps, d)?;
    if ns.iter().any(|&n| n == 0 || n > len) {
        return Err(Error::InvalidParameter(format!("checkpoints must lie in 1..={len}")));
    }
    let mut sum = CompensatedSum::default();
    let mut values = Vec::with_capacity(ns.len());
    let mut next = 0;
    for (k, x) in steps.chunks_exact(d).enumerate() {
        sum.add(spec.functional.eval(x));
        let n = k as u64 + 1;
        while next < ns.len() && ns[next] == n {
            values.push(sum.value() / n as f64 - spec.reference);
            next += 1;
        }
    }
    Ok(DeltaSeries {
        name: spec.name(),
        ns: ns.to_vec(),
        values,
        warning: spec.warning.clone(),
    })
}

/// ‖Δ_n(xxᵀ)‖_F = ‖(1/n) Σ X_i X_iᵀ − E X Xᵀ‖_F at each requested time.
pub fn delta_second_moment_frobenius(
    dist: &StepDistribution,
    steps: &[f64],
    ns: &[u64],
) -> Result<Vec<f64>> {
    let d = dist.dim();
    let len = check_trajectory(steps, d)?;
    if ns.iter().any(|&n| n == 0 || n > len) {
        return Err(Error::InvalidParameter(format!("checkpoints must lie in 1..={len}")));
    }
    let m = dist
        .second_moment_matrix()
        .ok_or_else(|| Error::InvalidDistribution(format!("{dist} has infinite second moment")))?;
    let mut sums = vec![CompensatedSum::default(); d * d];
    let mut out = Vec::with_capacity(ns.len());
    let mut next = 0;
    for (k, x) in steps.chunks_exact(d).enumerate() {
        for i in 0..d {
            for j in 0..d {
                sums[i * d + j].add(x[i] * x[j]);
            }
        }
        let n = k as u64 + 1;
        while next < ns.len() && ns[next] == n {
            let mut fro = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let e = sums[i * d + j].value() / n as f64 - m[(i, j)];
                    fro += e * e;
                }
            }
            out.push(fro.sqrt());
            next += 1;
        }
    }
    Ok(out)
}

/// Streams Σ h(X_i) during a walk and reports Δ_n(h) at checkpoints.
pub struct DeltaObserver {
    specs: Vec<FunctionalSpec>,
    sums: Vec<CompensatedSum>,
}

impl DeltaObserver {
    pub fn new(specs: Vec<FunctionalSpec>) -> Self {
        let sums = vec![CompensatedSum::default(); specs.len()];
        Self { specs, sums }
    }
}

impl Observer for DeltaObserver {
    fn columns(&self) -> Vec<String> {
        self.specs.iter().map(|s| format!("delta_{}", s.name())).collect()
    }

    fn per_step(&self) -> bool {
        true
    }

    fn on_step(&mut self, _n: u64, step: &[f64], _position: &[f64]) {
        for (s, spec) in self.sums.iter_mut().zip(&self.specs) {
            s.add(spec.functional.eval(step));
        }
    }

    fn at_checkpoint(&mut self, n: u64, _position: &[f64]) -> Vec<f64> {
        self.sums
            .iter()
            .zip(&self.specs)
            .map(|(s, spec)| s.value() / n as f64 - spec.reference)
            .collect()
    }
}

/// β_n and γ_n for n = 1..=n_max (index n − 1), with β_n·n^{1−α}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaGamma {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub scaled: Vec<f64>,
}

impl BetaGamma {
    pub fn beta(&self, n: u64) -> f64 {
        self.beta[n as usize - 1]
    }

    pub fn gamma(&self, n: u64) -> f64 {
        self.gamma[n as usize - 1]
    }

    /// Limit of β_n·n^{1−α}.
    pub fn limit_constant(alpha: f64) -> f64 {
        1.0 / statrs::function::gamma::gamma(1.0 + alpha)
    }
}

/// γ_n = (1 − α)/(n + 1) and β_n = Π_{k<n} (1 − γ_k), accumulated in log space.
pub fn beta_gamma(n_max: u64, alpha: f64) -> Result<BetaGamma> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let len = n_max as usize;
    let mut beta = Vec::with_capacity(len);
    let mut gamma = Vec::with_capacity(len);
    let mut scaled = Vec::with_capacity(len);
    let mut log_beta = CompensatedSum::default();
    for n in 1..=n_max {
        let g = (1.0 - alpha) / (n as f64 + 1.0);
        let b = log_beta.value().exp();
        beta.push(b);
        gamma.push(g);
        scaled.push((log_beta.value() + (1.0 - alpha) * (n as f64).ln()).exp());
        log_beta.add((-g).ln_1p());
    }
    Ok(BetaGamma { alpha, beta, gamma, scaled })
}

/// Largest relative residuals of the one-step recursion
/// Δ_{n+1} − Δ_n = γ_n(−Δ_n + ε_{n+1}) and of its solved form
/// Δ_n = β_n(Δ_1 + Σ_{j<n} (γ_j/β_{j+1}) ε_{j+1}), with
/// ε_{n+1} = (h(X_{n+1}) − E h − αΔ_n)/(1 − α).
///
/// Each residual is divided by the magnitude of the terms it combines, |E h|
/// included since Δ_n is formed by cancelling against it, so the result
/// measures floating-point agreement rather than the size of Δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionResidual {
    pub recursion: f64,
    pub closed_form: f64,
    pub steps: u64,
}

pub fn delta_recursion_residual(
    spec: &FunctionalSpec,
    steps: &[f64],
    d: usize,
    alpha: f64,
) -> Result<RecursionResidual> {
    let len = check_trajectory(steps, d)?;
    let bg = beta_gamma(len, alpha)?;
    let eh = spec.reference;
    let hs: Vec<f64> = steps.chunks_exact(d).map(|x| spec.functional.eval(x)).collect();

    let mut sum = CompensatedSum::default();
    sum.add(hs[0]);
    let mut delta = hs[0] - eh;
    let delta_1 = delta;
    // Σ_{j<n} (γ_j/β_{j+1}) ε_{j+1} and the sum of the absolute terms.
    let mut series = CompensatedSum::default();
    let mut series_abs = 0.0;
    let mut worst_rec: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;

    for n in 1..len {
        let h_next = hs[n as usize];
        let eps = (h_next - eh - alpha * delta) / (1.0 - alpha);
        let g = bg.gamma(n);
        sum.add(h_next);
        let next = sum.value() / (n + 1) as f64 - eh;

        let lhs = next - delta;
        let rhs = g * (-delta + eps);
        let scale = lhs.abs() + rhs.abs() + next.abs() + delta.abs() + eh.abs() + f64::MIN_POSITIVE;
        worst_rec = worst_rec.max((lhs - rhs).abs() / scale);

        let term = g / bg.beta(n + 1) * eps;
        series.add(term);
        series_abs += term.abs();
        let b = bg.beta(n + 1);
        let closed = b * (delta_1 + series.value());
        let scale = next.abs() + eh.abs() + b * (delta_1.abs() + series_abs) + f64::MIN_POSITIVE;
        worst_closed = worst_closed.max((closed - next).abs() / scale);

        delta = next;
    }
    Ok(RecursionResidual { recursion: worst_rec, closed_form: worst_closed, steps: len })
}

/// n^ν |Δ_n(h)| at checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MzTrace {
    pub ns: Vec<u64>,
    pub values: Vec<f64>,
    pub warning: Option<String>,
}

/// Normalised deviation n^ν|Δ_n| for a law with E|h|^s < ∞. Warns when
/// α > 1/2 or ν ≥ 1 − 1/s, where no decay is claimed.
pub fn mz_rate_trace(ns: &[u64], deltas: &[f64], nu: f64, s: f64, alpha: f64) -> Result<MzTrace> {
    if ns.len() != deltas.len() {
        return Err(Error::InvalidParameter("times and deviations differ in length".into()));
    }
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
    }
    let mut warning = None;
    if alpha > 0.5 {
        warning = Some(format!("alpha = {alpha} > 1/2: no rate is claimed"));
    } else if nu >= 1.0 - 1.0 / s {
        warning = Some(format!("nu = {nu} ≥ 1 − 1/s = {}: no rate is claimed", 1.0 - 1.0 / s));
    }
    let values = ns
        .iter()
        .zip(deltas)
        .map(|(&n, dlt)| (n as f64).powf(nu) * dlt.abs())
        .collect();
    Ok(MzTrace { ns: ns.to_vec(), values, warning })
}
