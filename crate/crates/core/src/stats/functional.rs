use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::model::{DistKind, StepDistribution};

/// Scalar test functions h: R^d → R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Coordinate(usize),
    NormSquared,
    CrossMoment(usize, usize),
    NormPower(f64),
    /// ‖x‖²·1{‖x‖ ≥ K}.
    TailIndicator(f64),
}

impl Functional {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Functional::Coordinate(i) => x[i],
            Functional::NormSquared => x.iter().map(|v| v * v).sum(),
            Functional::CrossMoment(i, j) => x[i] * x[j],
            Functional::NormPower(q) => x.iter().map(|v| v * v).sum::<f64>().powf(q / 2.0),
            Functional::TailIndicator(k) => {
                let sq: f64 = x.iter().map(|v| v * v).sum();
                if sq >= k * k {
                    sq
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Functional::Coordinate(i) => format!("coord{i}"),
            Functional::NormSquared => "norm2".into(),
            Functional::CrossMoment(i, j) => format!("cross{i}{j}"),
            Functional::NormPower(q) => format!("normpow{q}"),
            Functional::TailIndicator(k) => format!("tail{k}"),
        }
    }

    /// Moment order needed for E|h(X)| < ∞.
    pub fn moment_needed(&self) -> f64 {
        match *self {
            Functional::Coordinate(_) => 1.0,
            Functional::NormPower(q) => q,
            _ => 2.0,
        }
    }

    fn max_index(&self) -> Option<usize> {
        match *self {
            Functional::Coordinate(i) => Some(i),
            Functional::CrossMoment(i, j) => Some(i.max(j)),
            _ => None,
        }
    }

    /// E h(X) for the built-in laws, or `None` when it is infinite.
    pub fn reference(&self, dist: &StepDistribution) -> Option<f64> {
        if !dist.has_moment(self.moment_needed()) {
            return None;
        }
        if let Some(v) = dist.expect_discrete(|x| self.eval(x)) {
            return Some(v);
        }
        let d = dist.dim() as f64;
        match (dist.kind(), *self) {
            (DistKind::GaussianStandard, Functional::Coordinate(_)) => Some(0.0),
            (DistKind::GaussianStandard, Functional::NormSquared) => Some(d),
            (DistKind::GaussianStandard, Functional::CrossMoment(i, j)) => {
                Some(if i == j { 1.0 } else { 0.0 })
            }
            (DistKind::GaussianStandard, Functional::NormPower(q)) => Some(
                (q / 2.0 * std::f64::consts::LN_2 + ln_gamma((d + q) / 2.0) - ln_gamma(d / 2.0)).exp(),
            ),
            (DistKind::GaussianStandard, Functional::TailIndicator(k)) => {
                let chi = ChiSquared::new(d + 2.0).expect("positive degrees of freedom");
                Some(d * chi.sf(k * k))
            }
            (DistKind::SymmetricPareto { .. }, Functional::Coordinate(_)) => Some(0.0),
            (DistKind::SymmetricPareto { tail_index: a, scale: s }, f) => {
                let q = match f {
                    Functional::NormPower(q) => q,
                    _ => 2.0,
                };
                let full = s.powf(q) * a / (a - q);
                match f {
                    Functional::TailIndicator(k) if k > *s => {
                        Some(a * s.powf(*a) * k.powf(2.0 - a) / (a - 2.0))
                    }
                    _ => Some(full),
                }
            }
            _ => None,
        }
    }
}

/// A functional paired with its reference value for a given law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSpec {
    pub functional: Functional,
    pub reference: f64,
    /// Set when the law lacks the moments h needs; `reference` is then 0 and the
    /// reported values are plain empirical means.
    pub warning: Option<String>,
}

impl FunctionalSpec {
    pub fn new(functional: Functional, dist: &StepDistribution) -> Self {
        if let Some(i) = functional.max_index() {
            assert!(i < dist.dim(), "coordinate {i} out of range for dimension {}", dist.dim());
        }
        match functional.reference(dist) {
            Some(reference) => Self { functional, reference, warning: None },
            None => Self {
                functional,
                reference: 0.0,
                warning: Some(format!(
                    "{} needs moments of order {} which {dist} lacks",
                    functional.name(),
                    functional.moment_needed()
                )),
            },
        }
    }

    pub fn name(&self) -> String {
        self.functional.name()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_references() {
        let g = StepDistribution::gaussian(3).unwrap();
        assert_eq!(Functional::NormSquared.reference(&g), Some(3.0));
        // E‖Z‖² via the norm-power formula.
        assert_relative_eq!(Functional::NormPower(2.0).reference(&g).unwrap(), 3.0, epsilon = 1e-12);
        // E‖Z‖ in d = 3 is 2√(2/π).
        assert_relative_eq!(
            Functional::NormPower(1.0).reference(&g).unwrap(),
            2.0 * (2.0 / std::f64::consts::PI).sqrt(),
            epsilon = 1e-12
        );
        assert_relative_eq!(Functional::TailIndicator(0.0).reference(&g).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_tail_by_monte_carlo() {
        let g = StepDistribution::gaussian(2).unwrap();
        let h = Functional::TailIndicator(2.0);
        let mut rng = stream(6);
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| h.eval(&g.sample(&mut rng))).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        // In d = 2, E‖Z‖²1{‖Z‖≥K} = (K² + 2) e^{−K²/2}.
        let exact = 6.0 * (-2.0f64).exp();
        assert_relative_eq!(h.reference(&g).unwrap(), exact, epsilon = 1e-12);
        assert!((mean - exact).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn pareto_references() {
        let p = StepDistribution::symmetric_pareto(3.0, 2.0).unwrap();
        assert_relative_eq!(Functional::NormSquared.reference(&p).unwrap(), 12.0);
        assert_relative_eq!(Functional::NormPower(1.0).reference(&p).unwrap(), 3.0);
        // ∫_5^∞ x² · 3·8·x^{-4} dx = 24/5.
        assert_relative_eq!(Functional::TailIndicator(5.0).reference(&p).unwrap(), 24.0 / 5.0);
        assert_relative_eq!(Functional::TailIndicator(1.0).reference(&p).unwrap(), 12.0);
        let heavy = StepDistribution::symmetric_pareto(1.5, 1.0).unwrap();
        assert_eq!(Functional::NormSquared.reference(&heavy), None);
        assert_eq!(Functional::Coordinate(0).reference(&heavy), Some(0.0));
        let spec = FunctionalSpec::new(Functional::NormSquared, &heavy);
        assert!(spec.warning.is_some());
    }

    #[test]
    fn discrete_references_are_exact() {
        let tri = StepDistribution::triangular_lattice();
        assert_relative_eq!(Functional::NormSquared.reference(&tri).unwrap(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(Functional::CrossMoment(0, 0).reference(&tri).unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(Functional::CrossMoment(0, 1).reference(&tri).unwrap(), 0.0, epsilon = 1e-14);
        assert_eq!(Functional::TailIndicator(3.0).reference(&tri), Some(0.0));
    }
}
