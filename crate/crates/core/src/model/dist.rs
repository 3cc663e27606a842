use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Pareto, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a discrete law.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// Most support points a discrete law may have for exact bookkeeping.
pub const MAX_SUPPORT: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum DistKind {
    /// Finite support with explicit probabilities.
    Discrete { support: Vec<(Vec<f64>, f64)> },
    /// N(0, I_d).
    GaussianStandard,
    /// ±1 with probability 1/2 each, d = 1.
    Rademacher,
    /// Uniform over a finite set of direction vectors.
    UniformDirections { directions: Vec<Vec<f64>> },
    /// Random sign times a Pareto magnitude with survival (x/scale)^(-tail_index), x ≥ scale.
    SymmetricPareto { tail_index: f64, scale: f64 },
}

/// A sampleable step law on R^d.
///
/// The declared mean and moment order are derived from the parameters at
/// construction, so they are exact for every built-in kind.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    kind: DistKind,
    dim: usize,
    mean: Vec<f64>,
    moment_order: f64,
    points: Vec<Vec<f64>>,
    cdf: Vec<f64>,
}

impl StepDistribution {
    pub fn discrete(support: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if support.len() > MAX_SUPPORT {
            return Err(Error::InvalidDistribution(format!(
                "support has {} points, limit is {MAX_SUPPORT}",
                support.len()
            )));
        }
        let dim = support[0].0.len();
        if dim == 0 {
            return Err(Error::InvalidDistribution("zero-dimensional support point".into()));
        }
        let mut total = 0.0;
        for (point, p) in &support {
            if point.len() != dim {
                return Err(Error::InvalidDistribution(format!(
                    "support point {point:?} has dimension {} but expected {dim}",
                    point.len()
                )));
            }
            if point.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "support point {point:?} is not finite"
                )));
            }
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} of {point:?} is not a nonnegative number"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Self::from_atoms(DistKind::Discrete { support: support.clone() }, support)
    }

    pub fn gaussian(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDistribution("gaussian dimension must be positive".into()));
        }
        Ok(Self {
            kind: DistKind::GaussianStandard,
            dim,
            mean: vec![0.0; dim],
            moment_order: f64::INFINITY,
            points: Vec::new(),
            cdf: Vec::new(),
        })
    }

    pub fn rademacher() -> Self {
        let atoms = vec![(vec![1.0], 0.5), (vec![-1.0], 0.5)];
        Self::from_atoms(DistKind::Rademacher, atoms).expect("rademacher is valid")
    }

    pub fn uniform_directions(directions: Vec<Vec<f64>>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidDistribution("empty direction set".into()));
        }
        let p = 1.0 / directions.len() as f64;
        let atoms: Vec<_> = directions.iter().map(|v| (v.clone(), p)).collect();
        // Reuse the discrete validation for dimensions and finiteness.
        Self::discrete(atoms.clone())?;
        Self::from_atoms(DistKind::UniformDirections { directions }, atoms)
    }

    /// The six unit steps of the triangular lattice, scaled to length 2:
    /// ±(2,0), ±(1,√3), ±(1,−√3).
    pub fn triangular_lattice() -> Self {
        let r3 = 3f64.sqrt();
        Self::uniform_directions(vec![
            vec![2.0, 0.0],
            vec![-2.0, 0.0],
            vec![1.0, r3],
            vec![-1.0, -r3],
            vec![1.0, -r3],
            vec![-1.0, r3],
        ])
        .expect("lattice directions are valid")
    }

    /// The 2d signed basis directions ±e_1, …, ±e_d (elephant random walk steps).
    pub fn lattice_basis(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDistribution("dimension must be positive".into()));
        }
        let mut dirs = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; dim];
                v[i] = sign;
                dirs.push(v);
            }
        }
        Self::uniform_directions(dirs)
    }

    pub fn symmetric_pareto(tail_index: f64, scale: f64) -> Result<Self> {
        if !(tail_index.is_finite() && tail_index > 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "pareto tail index must exceed 1, got {tail_index}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "pareto scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            kind: DistKind::SymmetricPareto { tail_index, scale },
            dim: 1,
            mean: vec![0.0],
            moment_order: tail_index,
            points: Vec::new(),
            cdf: Vec::new(),
        })
    }

    fn from_atoms(kind: DistKind, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let dim = atoms[0].0.len();
        if atoms
            .iter()
            .all(|(v, p)| *p == 0.0 || v.iter().all(|&x| x == 0.0))
        {
            return Err(Error::InvalidDistribution(
                "the Dirac mass at the origin is excluded".into(),
            ));
        }
        let mut mean = vec![0.0; dim];
        let mut cdf = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for (v, p) in &atoms {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += p * x;
            }
            acc += p;
            cdf.push(acc);
        }
        // Guard the inversion against a total of 1 - 1e-13.
        if let Some(last) = cdf.last_mut() {
            *last = f64::INFINITY;
        }
        Ok(Self {
            kind,
            dim,
            mean,
            moment_order: f64::INFINITY,
            points: atoms.into_iter().map(|(v, _)| v).collect(),
            cdf,
        })
    }

    pub fn kind(&self) -> &DistKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Supremum of the exponents s with E‖X‖^s < ∞ (the supremum itself is excluded
    /// for the pareto law).
    pub fn moment_order(&self) -> f64 {
        self.moment_order
    }

    pub fn has_moment(&self, s: f64) -> bool {
        s < self.moment_order
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean.iter().all(|m| m.abs() <= 1e-12)
    }

    pub fn is_discrete(&self) -> bool {
        !self.points.is_empty()
    }

    /// Support points with probabilities, in sampling order.
    pub fn atoms(&self) -> Option<Vec<(Vec<f64>, f64)>> {
        if !self.is_discrete() {
            return None;
        }
        let mut prev = 0.0;
        let probs: Vec<f64> = self
            .cdf
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let c = if i + 1 == self.cdf.len() { 1.0 } else { c };
                let p = c - prev;
                prev = c;
                p
            })
            .collect();
        Some(self.points.iter().cloned().zip(probs).collect())
    }

    pub(crate) fn support_points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Index of the support point selected by a uniform variate in [0, 1).
    pub(crate) fn atom_index(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u)
    }

    /// Writes one draw into `out` (length d).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match &self.kind {
            DistKind::GaussianStandard => {
                for x in out.iter_mut() {
                    *x = StandardNormal.sample(rng);
                }
            }
            DistKind::SymmetricPareto { tail_index, scale } => {
                let magnitude: f64 = Pareto::new(*scale, *tail_index)
                    .expect("validated parameters")
                    .sample(rng);
                out[0] = if rng.random::<bool>() { magnitude } else { -magnitude };
            }
            DistKind::Discrete { .. }
            | DistKind::Rademacher
            | DistKind::UniformDirections { .. } => {
                let i = self.atom_index(rng.random::<f64>());
                out.copy_from_slice(&self.points[i]);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(rng, &mut out);
        out
    }

    /// E X Xᵀ, or `None` when the second moment is infinite.
    pub fn second_moment_matrix(&self) -> Option<DMatrix<f64>> {
        let d = self.dim;
        match &self.kind {
            DistKind::GaussianStandard => Some(DMatrix::identity(d, d)),
            DistKind::SymmetricPareto { tail_index, scale } => {
                if *tail_index > 2.0 {
                    let m2 = scale * scale * tail_index / (tail_index - 2.0);
                    Some(DMatrix::from_element(1, 1, m2))
                } else {
                    None
                }
            }
            _ => {
                let mut m = DMatrix::zeros(d, d);
                for (v, p) in self.atoms().expect("discrete") {
                    for i in 0..d {
                        for j in 0..d {
                            m[(i, j)] += p * v[i] * v[j];
                        }
                    }
                }
                Some(m)
            }
        }
    }

    /// E‖X‖², or `None` when infinite.
    pub fn second_moment(&self) -> Option<f64> {
        self.second_moment_matrix().map(|m| m.trace())
    }

    /// Exact expectation of `h` for discrete laws.
    pub fn expect_discrete(&self, h: impl Fn(&[f64]) -> f64) -> Option<f64> {
        self.atoms()
            .map(|atoms| atoms.iter().map(|(v, p)| p * h(v)).sum())
    }

    /// Applies the linear map `m` (k×d) to every step. Only kinds that stay in
    /// the built-in roster under the map are supported.
    pub fn linear_image(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.ncols() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "map has {} columns but the law lives in dimension {}",
                m.ncols(),
                self.dim
            )));
        }
        let map = |v: &[f64]| -> Vec<f64> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
                .collect()
        };
        match &self.kind {
            DistKind::Discrete { support } => {
                Self::discrete(support.iter().map(|(v, p)| (map(v), *p)).collect())
            }
            DistKind::Rademacher => {
                Self::discrete(vec![(map(&[1.0]), 0.5), (map(&[-1.0]), 0.5)])
            }
            DistKind::UniformDirections { directions } => {
                Self::uniform_directions(directions.iter().map(|v| map(v)).collect())
            }
            DistKind::SymmetricPareto { tail_index, scale } if m.nrows() == 1 => {
                let c = m[(0, 0)].abs();
                Self::symmetric_pareto(*tail_index, scale * c)
            }
            DistKind::GaussianStandard if is_orthogonal(m) => Self::gaussian(self.dim),
            _ => Err(Error::InvalidParameter(format!(
                "linear image of {self} is outside the built-in roster"
            ))),
        }
    }

    /// Startup self-test: the empirical mean of `draws` samples must lie within
    /// five standard errors of the declared mean in every coordinate. Laws with
    /// infinite variance are skipped (returns `Ok(false)`).
    pub fn self_test<R: Rng + ?Sized>(&self, rng: &mut R, draws: usize) -> Result<bool> {
        let Some(m2) = self.second_moment_matrix() else {
            return Ok(false);
        };
        let mut sum = vec![0.0; self.dim];
        let mut buf = vec![0.0; self.dim];
        for _ in 0..draws {
            self.sample_into(rng, &mut buf);
            for (s, x) in sum.iter_mut().zip(&buf) {
                *s += x;
            }
        }
        for i in 0..self.dim {
            let var = m2[(i, i)] - self.mean[i] * self.mean[i];
            let se = (var.max(0.0) / draws as f64).sqrt();
            let emp = sum[i] / draws as f64;
            if (emp - self.mean[i]).abs() > 5.0 * se + 1e-12 {
                return Err(Error::InvalidDistribution(format!(
                    "declared mean {} in coordinate {i} disagrees with empirical {emp} (se {se})",
                    self.mean[i]
                )));
            }
        }
        Ok(true)
    }
}

fn is_orthogonal(m: &DMatrix<f64>) -> bool {
    if !m.is_square() {
        return false;
    }
    let prod = m.transpose() * m;
    (prod - DMatrix::identity(m.nrows(), m.nrows())).norm() < 1e-12
}

fn write_vector(f: &mut fmt::Formatter<'_>, v: &[f64]) -> fmt::Result {
    write!(f, "(")?;
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, ")")
}

impl fmt::Display for StepDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DistKind::GaussianStandard => write!(f, "gaussian(d={})", self.dim),
            DistKind::Rademacher => write!(f, "rademacher"),
            DistKind::SymmetricPareto { tail_index, scale } => {
                write!(f, "pareto(a={tail_index}, scale={scale})")
            }
            DistKind::UniformDirections { directions } => {
                write!(f, "directions[")?;
                for (i, v) in directions.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write_vector(f, v)?;
                }
                write!(f, "]")
            }
            DistKind::Discrete { support } => {
                write!(f, "discrete[")?;
                for (i, (v, p)) in support.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write_vector(f, v)?;
                    write!(f, ":{p}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl FromStr for StepDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        super::grammar::parse(s)
    }
}

impl Serialize for StepDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StepDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn rejects_bad_discrete_laws() {
        assert!(StepDistribution::discrete(vec![(vec![1.0], 0.5), (vec![-1.0], 0.4)]).is_err());
        assert!(StepDistribution::discrete(vec![(vec![1.0], 1.2), (vec![-1.0], -0.2)]).is_err());
        assert!(StepDistribution::discrete(vec![(vec![0.0, 0.0], 1.0)]).is_err());
        assert!(StepDistribution::discrete(vec![(vec![1.0], 0.5), (vec![1.0, 2.0], 0.5)]).is_err());
        // Within 1e-12 of 1 is accepted.
        assert!(StepDistribution::discrete(vec![(vec![1.0], 0.5 + 4e-13), (vec![-1.0], 0.5)]).is_ok());
    }

    #[test]
    fn dirac_sampling_is_constant() {
        let d = StepDistribution::discrete(vec![(vec![1.0, 0.0], 1.0)]).unwrap();
        let mut rng = stream(1);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng), vec![1.0, 0.0]);
        }
        assert_eq!(d.mean(), &[1.0, 0.0]);
        assert!(!d.is_mean_zero());
    }

    #[test]
    fn rademacher_empirical_mean() {
        let d = StepDistribution::rademacher();
        let mut rng = stream(2024);
        let n = 1_000_000;
        let mut buf = [0.0];
        let mut sum = 0.0;
        for _ in 0..n {
            d.sample_into(&mut rng, &mut buf);
            sum += buf[0];
        }
        // Four standard errors with unit variance.
        assert!((sum / n as f64).abs() < 0.004);
    }

    #[test]
    fn pareto_tail_probability() {
        let d = StepDistribution::symmetric_pareto(1.5, 1.0).unwrap();
        let mut rng = stream(99);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| d.sample(&mut rng)[0].abs() > 10.0)
            .count();
        let p = 10f64.powf(-1.5);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let emp = hits as f64 / n as f64;
        assert!((emp - p).abs() < 3.0 * se, "emp {emp} vs {p}");
        assert_eq!(d.moment_order(), 1.5);
        assert!(d.has_moment(1.4) && !d.has_moment(1.5));
        assert!(d.second_moment().is_none());
    }

    #[test]
    fn pareto_sign_is_symmetric() {
        let d = StepDistribution::symmetric_pareto(3.0, 2.0).unwrap();
        let mut rng = stream(5);
        let n = 200_000;
        let pos = (0..n).filter(|_| d.sample(&mut rng)[0] > 0.0).count() as f64 / n as f64;
        assert!((pos - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
        assert!((d.second_moment().unwrap() - 4.0 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn self_test_accepts_builtins() {
        let mut rng = stream(3);
        for d in [
            StepDistribution::rademacher(),
            StepDistribution::gaussian(3).unwrap(),
            StepDistribution::triangular_lattice(),
            StepDistribution::symmetric_pareto(3.0, 1.0).unwrap(),
        ] {
            assert!(d.self_test(&mut rng, 100_000).unwrap());
        }
        let heavy = StepDistribution::symmetric_pareto(1.5, 1.0).unwrap();
        assert!(!heavy.self_test(&mut rng, 1000).unwrap());
    }

    #[test]
    fn atoms_recover_probabilities() {
        let d = StepDistribution::discrete(vec![(vec![1.0], 0.25), (vec![-3.0], 0.75)]).unwrap();
        let atoms = d.atoms().unwrap();
        assert_eq!(atoms[0], (vec![1.0], 0.25));
        assert!((atoms[1].1 - 0.75).abs() < 1e-15);
        assert_eq!(d.mean(), &[0.25 - 2.25]);
    }

    #[test]
    fn linear_image_of_pareto_rescales() {
        let d = StepDistribution::symmetric_pareto(3.0, 1.0).unwrap();
        let img = d.linear_image(&DMatrix::from_element(1, 1, -2.0)).unwrap();
        assert_eq!(
            img.kind(),
            &DistKind::SymmetricPareto { tail_index: 3.0, scale: 2.0 }
        );
        let g = StepDistribution::gaussian(2).unwrap();
        assert!(g.linear_image(&DMatrix::from_element(2, 2, 1.0)).is_err());
    }
}
