use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::StepDistribution;
use crate::pmf::Pmf;

use super::Forest;

pub const FOREST_EXACT_MAX_N: usize = 6;

/// Exact law of Σ |c_{i,n}| Θ_i: enumerate all parent choices and kept flags,
/// group the outcomes by their multiset of cluster sizes, then convolve the
/// spin laws of the clusters.
pub fn exact_forest_pmf(alpha: f64, dist: &StepDistribution, n: usize) -> Result<Pmf> {
    let atoms = dist
        .atoms()
        .ok_or_else(|| Error::InvalidParameter("exact enumeration needs a discrete distribution".into()))?;
    if n == 0 || n > FOREST_EXACT_MAX_N || atoms.len() > crate::walk::EXACT_MAX_SUPPORT {
        return Err(Error::TooLarge(format!(
            "n = {n} with {} support points (limits: 1 ≤ n ≤ {FOREST_EXACT_MAX_N}, support ≤ {})",
            atoms.len(),
            crate::walk::EXACT_MAX_SUPPORT
        )));
    }
    let mut partitions: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    let mut parents = vec![0u32];
    let mut kept = vec![false];
    enumerate(alpha, n, &mut parents, &mut kept, 1.0, &mut partitions)?;

    let d = dist.dim();
    let mut out = Pmf::new();
    for (sizes, weight) in partitions {
        let mut law: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; d], weight)];
        for &c in &sizes {
            let mut next = Vec::with_capacity(law.len() * atoms.len());
            for (s, p) in &law {
                for (v, q) in &atoms {
                    if *q > 0.0 {
                        let pos = s.iter().zip(v).map(|(a, b)| a + c as f64 * b).collect();
                        next.push((pos, p * q));
                    }
                }
            }
            law = next;
        }
        for (s, p) in law {
            out.add(&s, p);
        }
    }
    Ok(out)
}

fn enumerate(
    alpha: f64,
    n: usize,
    parents: &mut Vec<u32>,
    kept: &mut Vec<bool>,
    weight: f64,
    out: &mut BTreeMap<Vec<u64>, f64>,
) -> Result<()> {
    let v = parents.len() + 1;
    if v > n {
        let f = Forest::from_parts(parents, kept)?;
        let mut sizes: Vec<u64> = f.cluster_sizes().iter().copied().filter(|&s| s > 0).collect();
        sizes.sort_unstable();
        *out.entry(sizes).or_insert(0.0) += weight;
        return Ok(());
    }
    let w_parent = weight / (v - 1) as f64;
    for p in 1..v as u32 {
        for (flag, w) in [(true, alpha), (false, 1.0 - alpha)] {
            if w > 0.0 {
                parents.push(p);
                kept.push(flag);
                enumerate(alpha, n, parents, kept, w_parent * w, out)?;
                parents.pop();
                kept.pop();
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::exact_small_n_pmf;

    #[test]
    fn matches_direct_enumeration() {
        let r = StepDistribution::rademacher();
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            for n in 1..=FOREST_EXACT_MAX_N {
                let forest = exact_forest_pmf(alpha, &r, n).unwrap();
                let direct = exact_small_n_pmf(alpha, &r, n as u64).unwrap();
                assert!((forest.total() - 1.0).abs() < 1e-12);
                assert!(forest.max_abs_diff(&direct) <= 1e-12, "alpha {alpha} n {n}");
            }
        }
    }

    #[test]
    fn matches_for_asymmetric_planar_law() {
        let d = StepDistribution::discrete(vec![
            (vec![1.0, 0.0], 0.5),
            (vec![0.0, 2.0], 0.3),
            (vec![-1.0, -1.0], 0.2),
        ])
        .unwrap();
        for alpha in [0.3, 0.8] {
            let forest = exact_forest_pmf(alpha, &d, 5).unwrap();
            let direct = exact_small_n_pmf(alpha, &d, 5).unwrap();
            assert!(forest.max_abs_diff(&direct) <= 1e-12);
        }
    }

    #[test]
    fn caps_instance_size() {
        let r = StepDistribution::rademacher();
        assert!(matches!(exact_forest_pmf(0.5, &r, 7), Err(Error::TooLarge(_))));
    }
}
