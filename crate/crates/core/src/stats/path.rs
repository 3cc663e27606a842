use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::summary::ols_slope;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeExponent {
    /// Slope of log‖S_n‖ on log n over the last decade of checkpoints.
    pub slope: f64,
    /// log‖S_n‖ / log n at the final checkpoint.
    pub final_ratio: f64,
    pub points: usize,
}

/// Needs at least 4 checkpoints spanning 2 decades; checkpoints with ‖S_n‖ = 0 are dropped.
pub fn escape_exponent(ns: &[u64], norms: &[f64]) -> Result<EscapeExponent> {
    if ns.len() != norms.len() {
        return Err(Error::InvalidParameter("times and norms differ in length".into()));
    }
    if ns.len() < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 checkpoints, got {}", ns.len())));
    }
    let first = ns[0] as f64;
    let last = *ns.last().unwrap() as f64;
    if last < 100.0 * first {
        return Err(Error::InvalidParameter(format!(
            "checkpoints span {first}..{last}, less than two decades"
        )));
    }
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(norms)
        .filter(|&(&n, &r)| r > 0.0 && n as f64 * 10.0 >= last)
        .map(|(&n, &r)| ((n as f64).ln(), r.ln()))
        .collect();
    let slope = ols_slope(&pts).ok_or_else(|| {
        Error::InvalidParameter("fewer than two nonzero checkpoints in the last decade".into())
    })?;
    let final_norm = *norms.last().unwrap();
    let final_ratio = if final_norm > 0.0 { final_norm.ln() / last.ln() } else { f64::NEG_INFINITY };
    Ok(EscapeExponent { slope, final_ratio, points: pts.len() })
}

/// Smallest n at which both iterated-log normalisers are positive.
pub const LIL_MIN_N: u64 = 16;

/// √(2n log log n · Var/(1 − 2α)) for α < 1/2 and √(2n log n log log log n · Var) at α = 1/2.
pub fn lil_normaliser(n: u64, alpha: f64, variance: f64) -> f64 {
    let nf = n as f64;
    let l = nf.ln();
    if alpha < 0.5 {
        (2.0 * nf * l.ln() * variance / (1.0 - 2.0 * alpha)).sqrt()
    } else {
        (2.0 * nf * l * l.ln().ln() * variance).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilSeries {
    pub ns: Vec<u64>,
    pub ratios: Vec<f64>,
    pub running_max: Vec<f64>,
}

impl LilSeries {
    pub fn max(&self) -> f64 {
        self.running_max.last().copied().unwrap_or(0.0)
    }
}

/// (S_n − n E X)/normaliser for a one-dimensional walk. Checkpoints below 16 are skipped.
pub fn lil_ratio(ns: &[u64], positions: &[f64], mean: f64, alpha: f64, variance: f64) -> Result<LilSeries> {
    if alpha > 0.5 {
        return Err(Error::InvalidParameter(format!(
            "iterated-log normalisation applies for alpha ≤ 1/2, got {alpha}"
        )));
    }
    if ns.len() != positions.len() {
        return Err(Error::InvalidParameter("times and positions differ in length".into()));
    }
    let mut out = LilSeries { ns: Vec::new(), ratios: Vec::new(), running_max: Vec::new() };
    let mut best = f64::NEG_INFINITY;
    for (&n, &s) in ns.iter().zip(positions) {
        if n < LIL_MIN_N {
            continue;
        }
        let num = s - n as f64 * mean;
        let r = if num == 0.0 { 0.0 } else { num / lil_normaliser(n, alpha, variance) };
        best = best.max(r);
        out.ns.push(n);
        out.ratios.push(r);
        out.running_max.push(best);
    }
    Ok(out)
}

/// x/‖x‖, with 0̂ = 0.
pub fn unit(x: &[f64]) -> Vec<f64> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        vec![0.0; x.len()]
    } else {
        x.iter().map(|v| v / r).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularSeries {
    pub directions: Vec<Vec<f64>>,
    /// Largest pairwise distance among the last four directions.
    pub tail_oscillation: f64,
}

pub fn angular_series(positions: &[Vec<f64>]) -> AngularSeries {
    let directions: Vec<Vec<f64>> = positions.iter().map(|p| unit(p)).collect();
    let tail = &directions[directions.len().saturating_sub(4)..];
    let mut osc: f64 = 0.0;
    for (i, a) in tail.iter().enumerate() {
        for b in &tail[i + 1..] {
            let dist = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            osc = osc.max(dist);
        }
    }
    AngularSeries { directions, tail_oscillation: osc }
}

/// x_n = log(‖S_n‖² + n^κ)/log n.
pub fn xn(n: u64, norm: f64, kappa: f64) -> f64 {
    let nf = n as f64;
    (norm * norm + nf.powf(kappa)).ln() / nf.ln()
}

pub fn xn_trace(ns: &[u64], norms: &[f64], kappa: f64) -> Result<Vec<f64>> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidParameter(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    if ns.iter().any(|&n| n < 2) {
        return Err(Error::InvalidParameter("x_n needs n ≥ 2".into()));
    }
    Ok(ns.iter().zip(norms).map(|(&n, &r)| xn(n, r, kappa)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exponent_of_power_law() {
        let ns: Vec<u64> = (6..=20).map(|k| 1u64 << k).collect();
        for c in [0.3, 0.5, 0.75, 1.0] {
            let norms: Vec<f64> = ns.iter().map(|&n| (n as f64).powf(c)).collect();
            let e = escape_exponent(&ns, &norms).unwrap();
            assert!((e.slope - c).abs() < 1e-9);
            assert!((e.final_ratio - c).abs() < 1e-9);
        }
    }

    #[test]
    fn exponent_preconditions() {
        assert!(escape_exponent(&[10, 20, 40], &[1.0, 2.0, 3.0]).is_err());
        assert!(escape_exponent(&[10, 20, 40, 80], &[1.0; 4]).is_err());
        let ns = [10, 100, 400, 700, 1000];
        let e = escape_exponent(&ns, &[1.0, 2.0, 0.0, 5.0, 6.0]).unwrap();
        assert_eq!(e.points, 3);
    }

    #[test]
    fn lil_basics() {
        let s = lil_ratio(&[8, 16, 1000], &[3.0, 0.0, 0.0], 0.0, 0.25, 1.0).unwrap();
        assert_eq!(s.ns, vec![16, 1000]);
        assert_eq!(s.ratios, vec![0.0, 0.0]);
        assert!(lil_ratio(&[100], &[1.0], 0.0, 0.6, 1.0).is_err());
        let n = 10_000u64;
        let norm = lil_normaliser(n, 0.0, 1.0);
        assert_relative_eq!(norm, (2.0 * 1e4 * (1e4f64).ln().ln()).sqrt());
        assert!(lil_normaliser(16, 0.5, 1.0) > 0.0);
    }

    #[test]
    fn oscillation_examples() {
        let same = vec![vec![3.0, 4.0], vec![6.0, 8.0], vec![0.3, 0.4], vec![30.0, 40.0]];
        assert_eq!(angular_series(&same).tail_oscillation, 0.0);
        let flip = vec![vec![1.0, 0.0], vec![5.0, 0.0], vec![-2.0, 0.0]];
        assert_relative_eq!(angular_series(&flip).tail_oscillation, 2.0);
        assert_eq!(unit(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn oscillation_in_range(pts in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 1..8)) {
            let o = angular_series(&pts).tail_oscillation;
            prop_assert!((0.0..=2.0 + 1e-12).contains(&o));
        }
    }

    #[test]
    fn xn_examples() {
        assert_relative_eq!(xn(1000, 0.0, 0.9), 0.9, epsilon = 1e-12);
        let n = 5000u64;
        let r = (n as f64 - (n as f64).powf(0.9)).sqrt();
        assert_relative_eq!(xn(n, r, 0.9), 1.0, epsilon = 1e-12);
        assert!(xn_trace(&[1], &[0.0], 0.9).is_err());
        assert!(xn_trace(&[10], &[0.0], 1.0).is_err());
    }
}
