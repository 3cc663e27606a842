use crate::error::{Error, Result};
use crate::model::StepDistribution;
use crate::pmf::Pmf;

pub const EXACT_MAX_N: u64 = 8;
pub const EXACT_MAX_SUPPORT: usize = 4;

/// Exact law of S_n by enumerating every branch of the recursive construction:
/// the first step, then at each time either a fresh draw (weight (1 − α)·μ(v))
/// or a repeat of step U (weight α/k for each of the k earlier steps).
pub fn exact_small_n_pmf(alpha: f64, dist: &StepDistribution, n: u64) -> Result<Pmf> {
    let atoms = dist
        .atoms()
        .ok_or_else(|| Error::InvalidParameter("exact enumeration needs a discrete distribution".into()))?;
    if n == 0 || n > EXACT_MAX_N || atoms.len() > EXACT_MAX_SUPPORT {
        return Err(Error::TooLarge(format!(
            "n = {n} with {} support points (limits: 1 ≤ n ≤ {EXACT_MAX_N}, support ≤ {EXACT_MAX_SUPPORT})",
            atoms.len()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let mut pmf = Pmf::new();
    let mut history = Vec::with_capacity(n as usize);
    recurse(alpha, &atoms, n as usize, &mut history, 1.0, &mut pmf);
    Ok(pmf)
}

fn recurse(
    alpha: f64,
    atoms: &[(Vec<f64>, f64)],
    n: usize,
    history: &mut Vec<usize>,
    weight: f64,
    out: &mut Pmf,
) {
    let k = history.len();
    if k == n {
        let d = atoms[0].0.len();
        let mut s = vec![0.0; d];
        for &i in history.iter() {
            for (x, v) in s.iter_mut().zip(&atoms[i].0) {
                *x += v;
            }
        }
        out.add(&s, weight);
        return;
    }
    let fresh = if k == 0 { 1.0 } else { 1.0 - alpha };
    if fresh > 0.0 {
        for (i, (_, p)) in atoms.iter().enumerate() {
            if *p > 0.0 {
                history.push(i);
                recurse(alpha, atoms, n, history, weight * fresh * p, out);
                history.pop();
            }
        }
    }
    if k > 0 && alpha > 0.0 {
        let w = alpha / k as f64;
        for u in 0..k {
            let i = history[u];
            history.push(i);
            recurse(alpha, atoms, n, history, weight * w, out);
            history.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_steps_of_rademacher() {
        let r = StepDistribution::rademacher();
        let p1 = exact_small_n_pmf(0.5, &r, 1).unwrap();
        assert_eq!(p1.get(&[1.0]), 0.5);
        assert_eq!(p1.get(&[-1.0]), 0.5);
        let p2 = exact_small_n_pmf(0.5, &r, 2).unwrap();
        assert!((p2.get(&[0.0]) - 0.25).abs() < 1e-15);
        assert!((p2.get(&[2.0]) - 0.375).abs() < 1e-15);
        assert!((p2.get(&[-2.0]) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn full_memory_doubles_first_step() {
        let d = StepDistribution::discrete(vec![
            (vec![1.0, 0.0], 0.2),
            (vec![0.0, 1.0], 0.3),
            (vec![-1.0, -1.0], 0.5),
        ])
        .unwrap();
        let p = exact_small_n_pmf(1.0, &d, 2).unwrap();
        assert_eq!(p.len(), 3);
        assert!((p.get(&[2.0, 0.0]) - 0.2).abs() < 1e-15);
        assert!((p.get(&[0.0, 2.0]) - 0.3).abs() < 1e-15);
        assert!((p.get(&[-2.0, -2.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn total_mass_and_second_moment() {
        let r = StepDistribution::rademacher();
        // m_{n+1} = m_n (1 + 2α/n) + 1 with m_1 = 1.
        for alpha in [0.0, 0.3, 0.5, 0.9] {
            let mut m = 1.0;
            for n in 1..=8u64 {
                let p = exact_small_n_pmf(alpha, &r, n).unwrap();
                assert!((p.total() - 1.0).abs() < 1e-12);
                let second: f64 = p.iter().map(|(x, q)| q * x[0] * x[0]).sum();
                assert!((second - m).abs() < 1e-10, "alpha {alpha} n {n}: {second} vs {m}");
                m = m * (1.0 + 2.0 * alpha / n as f64) + 1.0;
            }
        }
    }

    #[test]
    fn rejects_oversized_instances() {
        let r = StepDistribution::rademacher();
        assert!(matches!(exact_small_n_pmf(0.5, &r, 9), Err(Error::TooLarge(_))));
        let big = StepDistribution::lattice_basis(3).unwrap();
        assert!(matches!(exact_small_n_pmf(0.5, &big, 2), Err(Error::TooLarge(_))));
        let g = StepDistribution::gaussian(1).unwrap();
        assert!(exact_small_n_pmf(0.5, &g, 2).is_err());
    }
}
