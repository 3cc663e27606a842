use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{exact_forest_pmf, grow_forest, walk_from_forest, SpinAssignment, FOREST_EXACT_MAX_N};
use crate::model::StepDistribution;
use crate::rng::{cell_id, replica_stream};
use crate::stats::{two_sample_chi2, TwoSampleTest};
use crate::walk::{exact_small_n_pmf, WalkState};

/// Tolerance for atom-wise agreement of the two exact laws.
pub const EXACT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactComparison {
    pub alpha: f64,
    pub n: usize,
    pub max_diff: f64,
    /// Atom with the largest difference and its two probabilities.
    pub worst_atom: Vec<f64>,
    pub walk_probability: f64,
    pub forest_probability: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleComparison {
    pub alpha: f64,
    pub n: u64,
    pub samples: usize,
    pub test: TwoSampleTest,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub dist: String,
    pub exact: Vec<ExactComparison>,
    pub sampled: Vec<SampleComparison>,
    pub level: f64,
    pub pass: bool,
}

impl EquivalenceReport {
    /// First failing exact comparison, if any.
    pub fn first_mismatch(&self) -> Option<&ExactComparison> {
        self.exact.iter().find(|c| !c.pass)
    }
}

/// Settings for [`equivalence_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSettings {
    pub n_small: usize,
    pub alphas: Vec<f64>,
    /// Horizon of the sampled comparison; 0 skips it.
    pub n_large: u64,
    pub samples: usize,
    pub level: f64,
    pub bins: usize,
    pub seed: u64,
}

impl Default for EquivalenceSettings {
    fn default() -> Self {
        Self {
            n_small: FOREST_EXACT_MAX_N,
            alphas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            n_large: 1000,
            samples: 100_000,
            level: 0.001,
            bins: 50,
            seed: 0,
        }
    }
}

/// Compares the direct walk with the forest construction: exact laws for
/// every n ≤ n_small, then a chi-square two-sample test on the first
/// coordinate of S_n at n_large.
pub fn equivalence_suite(dist: &StepDistribution, s: &EquivalenceSettings) -> Result<EquivalenceReport> {
    if s.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidParameter("alpha grid must lie in [0, 1]".into()));
    }
    let mut exact = Vec::new();
    for &alpha in &s.alphas {
        for n in 1..=s.n_small {
            let walk = exact_small_n_pmf(alpha, dist, n as u64)?;
            let forest = exact_forest_pmf(alpha, dist, n)?;
            let max_diff = walk.max_abs_diff(&forest);
            let (worst_atom, wp, fp) = walk.worst_atom(&forest).unwrap_or_default();
            exact.push(ExactComparison {
                alpha,
                n,
                max_diff,
                worst_atom,
                walk_probability: wp,
                forest_probability: fp,
                pass: max_diff <= EXACT_TOLERANCE,
            });
        }
    }

    let mut sampled = Vec::new();
    if s.n_large > 0 {
        for &alpha in &s.alphas {
            let (a, b) = sample_both(dist, alpha, s.n_large, s.samples, s.seed)?;
            let test = two_sample_chi2(&a, &b, s.bins)?;
            sampled.push(SampleComparison {
                alpha,
                n: s.n_large,
                samples: s.samples,
                test,
                pass: !test.rejects(s.level),
            });
        }
    }

    let pass = exact.iter().all(|c| c.pass) && sampled.iter().all(|c| c.pass);
    Ok(EquivalenceReport { dist: dist.to_string(), exact, sampled, level: s.level, pass })
}

/// First coordinates of S_n from `samples` direct walks and `samples` forests.
pub fn sample_both(
    dist: &StepDistribution,
    alpha: f64,
    n: u64,
    samples: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let walk_cell = cell_id(&format!("equivalence:walk:alpha={alpha},dist={dist},n={n}"));
    let forest_cell = cell_id(&format!("equivalence:forest:alpha={alpha},dist={dist},n={n}"));
    let counts = dist.is_discrete();
    let walks: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_stream(seed, walk_cell, i as u64);
            let mut state = if counts { WalkState::counts(dist) } else { WalkState::full(dist.dim()) };
            for _ in 0..n {
                state.advance(alpha, dist, &mut rng);
            }
            if counts {
                state.resync(dist);
            }
            state.position()[0]
        })
        .collect();
    let forests: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_stream(seed, forest_cell, i as u64);
            let forest = grow_forest(n as usize, alpha, &mut rng)?;
            let spins = SpinAssignment::sample(n as usize, dist, &mut rng);
            Ok(walk_from_forest(&forest, &spins)?[0])
        })
        .collect::<Result<_>>()?;
    Ok((walks, forests))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n2_rademacher_half() {
        let r = StepDistribution::rademacher();
        let w = exact_small_n_pmf(0.5, &r, 2).unwrap();
        let f = exact_forest_pmf(0.5, &r, 2).unwrap();
        for pmf in [w, f] {
            assert!((pmf.get(&[0.0]) - 0.25).abs() < 1e-15);
            assert!((pmf.get(&[2.0]) - 0.375).abs() < 1e-15);
            assert!((pmf.get(&[-2.0]) - 0.375).abs() < 1e-15);
        }
    }

    #[test]
    fn small_suite_passes() {
        let s = EquivalenceSettings { n_large: 200, samples: 5000, ..Default::default() };
        let rep = equivalence_suite(&StepDistribution::rademacher(), &s).unwrap();
        assert!(rep.pass, "{rep:#?}");
        assert_eq!(rep.exact.len(), 5 * 6);
        assert!(rep.first_mismatch().is_none());
    }

    #[test]
    fn sampler_detects_a_wrong_alpha() {
        let r = StepDistribution::rademacher();
        let (a, _) = sample_both(&r, 0.75, 300, 5000, 1).unwrap();
        let (_, b) = sample_both(&r, 0.5, 300, 5000, 2).unwrap();
        assert!(two_sample_chi2(&a, &b, 30).unwrap().rejects(0.001));
    }

    #[test]
    fn degenerate_alphas() {
        let r = StepDistribution::rademacher();
        // α = 1: S_n = n·X_1.
        let (a, b) = sample_both(&r, 1.0, 50, 200, 3).unwrap();
        assert!(a.iter().chain(&b).all(|x| x.abs() == 50.0));
        // α = 0: i.i.d. signs, parity of n.
        let (a, b) = sample_both(&r, 0.0, 51, 200, 3).unwrap();
        assert!(a.iter().chain(&b).all(|x| x.rem_euclid(2.0) == 1.0));
    }
}
