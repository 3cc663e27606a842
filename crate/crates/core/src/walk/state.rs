use rand::Rng;

use crate::model::StepDistribution;

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Steps X_1..X_n stored contiguously, d values each.
    Full { history: Vec<f64> },
    /// N_n(v) per support point.
    Counts { counts: Vec<u64> },
}

/// Position and memory of one walk.
///
/// Randomness is consumed lazily. In full mode a uniform decides ξ, then either
/// an index U in {0..n-1} or a fresh μ-draw is taken. In counts mode a single
/// uniform u selects the next support point: u < α picks the past step with
/// index ⌊u n / α⌋ in count order, otherwise (u − α)/(1 − α) is inverted
/// through the cdf of μ.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    n: u64,
    position: Vec<f64>,
    step: Vec<f64>,
    storage: Storage,
}

impl WalkState {
    pub fn full(d: usize) -> Self {
        Self {
            n: 0,
            position: vec![0.0; d],
            step: vec![0.0; d],
            storage: Storage::Full { history: Vec::new() },
        }
    }

    pub fn full_with_capacity(d: usize, steps: usize) -> Self {
        let mut s = Self::full(d);
        s.storage = Storage::Full { history: Vec::with_capacity(steps * d) };
        s
    }

    /// Counts-mode state; `dist` must be discrete.
    pub fn counts(dist: &StepDistribution) -> Self {
        assert!(dist.is_discrete(), "counts mode requires a discrete distribution");
        let d = dist.dim();
        Self {
            n: 0,
            position: vec![0.0; d],
            step: vec![0.0; d],
            storage: Storage::Counts { counts: vec![0; dist.support_points().len()] },
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn position(&self) -> &[f64] {
        &self.position
    }

    /// The most recent step X_n.
    pub fn last_step(&self) -> &[f64] {
        &self.step
    }

    pub fn is_counts(&self) -> bool {
        matches!(self.storage, Storage::Counts { .. })
    }

    pub fn history(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Full { history } => Some(history),
            Storage::Counts { .. } => None,
        }
    }

    pub fn step_counts(&self) -> Option<&[u64]> {
        match &self.storage {
            Storage::Counts { counts } => Some(counts),
            Storage::Full { .. } => None,
        }
    }

    /// Recomputes S_n = Σ N_n(v)·v from the counts (exact for integer support).
    pub fn resync(&mut self, dist: &StepDistribution) {
        if let Storage::Counts { counts } = &self.storage {
            self.position.iter_mut().for_each(|x| *x = 0.0);
            for (c, v) in counts.iter().zip(dist.support_points()) {
                if *c > 0 {
                    let c = *c as f64;
                    for (x, vi) in self.position.iter_mut().zip(v) {
                        *x += c * vi;
                    }
                }
            }
        }
    }

    /// Advances to time n + 1 and returns X_{n+1}.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        alpha: f64,
        dist: &StepDistribution,
        rng: &mut R,
    ) -> &[f64] {
        let n = self.n;
        match &mut self.storage {
            Storage::Full { history } => {
                let d = self.step.len();
                if n > 0 && rng.random::<f64>() < alpha {
                    let u = rng.random_range(0..n) as usize;
                    self.step.copy_from_slice(&history[u * d..(u + 1) * d]);
                } else {
                    dist.sample_into(rng, &mut self.step);
                }
                history.extend_from_slice(&self.step);
            }
            Storage::Counts { counts } => {
                let u: f64 = rng.random();
                let idx = if n > 0 && u < alpha {
                    let target = ((u / alpha * n as f64) as u64).min(n - 1);
                    let mut acc = 0;
                    let mut chosen = counts.len() - 1;
                    for (i, &c) in counts.iter().enumerate() {
                        acc += c;
                        if target < acc {
                            chosen = i;
                            break;
                        }
                    }
                    chosen
                } else {
                    let v = if n > 0 { (u - alpha) / (1.0 - alpha) } else { u };
                    dist.atom_index(v)
                };
                counts[idx] += 1;
                self.step.copy_from_slice(&dist.support_points()[idx]);
            }
        }
        for (x, s) in self.position.iter_mut().zip(&self.step) {
            *x += s;
        }
        self.n += 1;
        &self.step
    }
}

/// Law of X_{n+1} given the counts, as the two-stage mixture: repeat a past step
/// with probability α, else draw from μ. Indexed like the support of `dist`.
pub fn conditional_step_law(counts: &[u64], alpha: f64, dist: &StepDistribution) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    let atoms = dist.atoms().expect("discrete distribution");
    counts
        .iter()
        .zip(&atoms)
        .map(|(&c, (_, p))| {
            if n == 0 {
                *p
            } else {
                alpha * c as f64 / n as f64 + (1.0 - alpha) * p
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::erw_step_probability;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn full_memory_repeats_first_step() {
        let dist = StepDistribution::gaussian(2).unwrap();
        let mut rng = stream(8);
        let mut s = WalkState::full(2);
        let first = s.advance(1.0, &dist, &mut rng).to_vec();
        for n in 2..=500u64 {
            s.advance(1.0, &dist, &mut rng);
            for (x, f) in s.position().iter().zip(&first) {
                assert!((x - n as f64 * f).abs() <= 1e-12 * n as f64 * f.abs().max(1.0));
            }
        }
        let tri = StepDistribution::triangular_lattice();
        let mut c = WalkState::counts(&tri);
        let first = c.advance(1.0, &tri, &mut rng).to_vec();
        for _ in 1..1000 {
            c.advance(1.0, &tri, &mut rng);
        }
        assert_eq!(c.step_counts().unwrap().iter().filter(|&&k| k > 0).count(), 1);
        assert!((c.position()[0] - 1000.0 * first[0]).abs() < 1e-9);
    }

    #[test]
    fn full_mode_position_matches_history() {
        let dist = StepDistribution::gaussian(3).unwrap();
        let mut rng = stream(12);
        let mut s = WalkState::full(3);
        for _ in 0..10_000 {
            s.advance(0.6, &dist, &mut rng);
        }
        let h = s.history().unwrap();
        for j in 0..3 {
            let sum: f64 = h.iter().skip(j).step_by(3).sum();
            let scale: f64 = h.iter().skip(j).step_by(3).map(|x| x.abs()).sum();
            assert!((sum - s.position()[j]).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn counts_mode_position_is_exact() {
        let dist = StepDistribution::lattice_basis(2).unwrap();
        let mut rng = stream(4);
        let mut s = WalkState::counts(&dist);
        for _ in 0..100_000 {
            s.advance(0.7, &dist, &mut rng);
        }
        let counts = s.step_counts().unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 100_000);
        let x = counts[0] as f64 - counts[1] as f64;
        let y = counts[2] as f64 - counts[3] as f64;
        assert_eq!(s.position(), &[x, y]);
        let before = s.position().to_vec();
        s.resync(&dist);
        assert_eq!(s.position(), before.as_slice());
    }

    proptest! {
        #[test]
        fn two_stage_law_equals_erw_formula(
            counts in prop::collection::vec(0u64..1000, 6),
            alpha in 0.0f64..=1.0,
        ) {
            let n: u64 = counts.iter().sum();
            prop_assume!(n > 0);
            let tri = StepDistribution::triangular_lattice();
            let two_stage = conditional_step_law(&counts, alpha, &tri);
            let erw = erw_step_probability(&counts, n, alpha).unwrap();
            for (a, b) in two_stage.iter().zip(&erw) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn conditional_mean_from_frozen_state() {
        let alpha = 0.6;
        for dist in [StepDistribution::gaussian(2).unwrap(), StepDistribution::triangular_lattice()] {
            let mut rng = stream(31);
            let mut frozen = if dist.is_discrete() {
                WalkState::counts(&dist)
            } else {
                WalkState::full(2)
            };
            for _ in 0..40 {
                frozen.advance(alpha, &dist, &mut rng);
            }
            let n = frozen.n() as f64;
            let target: Vec<f64> = frozen.position().iter().map(|s| alpha * s / n).collect();
            let reps = 100_000;
            let mut sum = [0.0; 2];
            let mut sq = [0.0; 2];
            for _ in 0..reps {
                let mut s = frozen.clone();
                let x = s.advance(alpha, &dist, &mut rng);
                for j in 0..2 {
                    sum[j] += x[j];
                    sq[j] += x[j] * x[j];
                }
            }
            for j in 0..2 {
                let mean = sum[j] / reps as f64;
                let var = sq[j] / reps as f64 - mean * mean;
                let se = (var / reps as f64).sqrt();
                assert!((mean - target[j]).abs() < 5.0 * se, "{dist}: {mean} vs {}", target[j]);
            }
        }
    }
}
