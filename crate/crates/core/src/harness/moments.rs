use serde::{Deserialize, Serialize};

use super::{run_replicas, CellSpec, Diagnostic};
use crate::error::{Error, Result};
use crate::model::StepDistribution;
use crate::stats::Summary;
use crate::walk::Schedule;

/// m_n = E‖S_n‖² for n = 1..=n_max (index n − 1), from m_1 = E‖X‖² and
/// m_{n+1} = m_n(1 + 2α/n) + E‖X‖². Valid for mean-zero μ.
pub fn moment_oracle(alpha: f64, second_moment: f64, n_max: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max as usize);
    let mut m = second_moment;
    for n in 1..=n_max {
        out.push(m);
        m = m * (1.0 + 2.0 * alpha / n as f64) + second_moment;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: u64,
    pub empirical: f64,
    pub oracle: f64,
    pub std_error: f64,
    /// (empirical − oracle)/std_error; 0 when both agree exactly with no spread.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub alpha: f64,
    pub dist: String,
    pub replicas: u64,
    pub rows: Vec<MomentRow>,
    /// max |empirical − oracle|/oracle over checkpoints.
    pub max_rel_error: f64,
    pub max_abs_z: f64,
    /// Every checkpoint within `z_limit` standard errors.
    pub pass: bool,
    pub z_limit: f64,
}

/// Empirical mean of ‖S_n‖² over replicas against the exact recursion, at
/// checkpoints 1, 2, 4, .., n.
pub fn moment_check(
    alpha: f64,
    dist: &StepDistribution,
    n: u64,
    replicas: u64,
    seed: u64,
    z_limit: f64,
) -> Result<MomentReport> {
    if !dist.is_mean_zero() {
        return Err(Error::InvalidDistribution(format!("{dist} is not mean-zero")));
    }
    let m2 = dist
        .second_moment()
        .ok_or_else(|| Error::InvalidDistribution(format!("{dist} has infinite second moment")))?;
    let cell = CellSpec::new(alpha, dist.clone(), n, replicas)
        .with_schedule(Schedule::Geometric { start: 1, ratio: 2.0 })
        .with_diagnostics(vec![Diagnostic::NormSquared]);
    let reps = run_replicas(&cell, seed)?;
    let oracle = moment_oracle(alpha, m2, n);
    let mut rows = Vec::new();
    for (k, &t) in reps[0].checkpoints.iter().enumerate() {
        let values: Vec<f64> = reps.iter().map(|r| r.series["norm2"][k]).collect();
        let s = Summary::from_values(&values).expect("at least one replica");
        let se = s.std / (s.count as f64).sqrt();
        let o = oracle[t as usize - 1];
        let diff = s.mean - o;
        let z = if se > 0.0 {
            diff / se
        } else if diff.abs() <= 1e-12 * o.abs() {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(MomentRow { n: t, empirical: s.mean, oracle: o, std_error: se, z });
    }
    let max_rel_error = rows.iter().map(|r| (r.empirical - r.oracle).abs() / r.oracle).fold(0.0, f64::max);
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    Ok(MomentReport {
        alpha,
        dist: dist.to_string(),
        replicas,
        rows,
        max_rel_error,
        max_abs_z,
        pass: max_abs_z <= z_limit,
        z_limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::exact_small_n_pmf;

    #[test]
    fn oracle_small_values() {
        // α = 1/2, rademacher: 1, 1·2 + 1 = 3, 3·(1 + 1/2) + 1 = 11/2.
        assert_eq!(moment_oracle(0.5, 1.0, 3), vec![1.0, 3.0, 5.5]);
        assert_eq!(moment_oracle(0.0, 2.0, 3), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn oracle_matches_enumeration() {
        for alpha in [0.0, 0.3, 0.5, 0.9, 1.0] {
            let o = moment_oracle(alpha, 1.0, 7);
            for n in 1..=7u64 {
                let pmf = exact_small_n_pmf(alpha, &StepDistribution::rademacher(), n).unwrap();
                let m: f64 = pmf.iter().map(|(x, p)| p * x[0] * x[0]).sum();
                assert!((m - o[n as usize - 1]).abs() < 1e-12, "alpha={alpha} n={n}");
            }
        }
    }

    #[test]
    fn small_check_passes() {
        let r = moment_check(0.5, &StepDistribution::rademacher(), 100, 4000, 1, 4.0).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.rows[0].z, 0.0);
        assert_eq!(r.rows.last().unwrap().n, 100);
        assert!(moment_check(0.5, &"discrete[(1):1]".parse().unwrap(), 10, 10, 1, 4.0).is_err());
    }
}
