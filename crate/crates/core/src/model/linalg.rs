use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

use super::dist::StepDistribution;

/// Eigenvalues below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// T = (E X Xᵀ)^(−1/2) together with the matrix it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningMap {
    pub transform: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
}

impl WhiteningMap {
    pub fn dim(&self) -> usize {
        self.transform.nrows()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.transform * DVector::from_column_slice(x);
        v.iter().copied().collect()
    }

    /// ‖T·Cov·T − I‖_F.
    pub fn residual(&self) -> f64 {
        let d = self.dim();
        (&self.transform * &self.covariance * &self.transform - DMatrix::identity(d, d)).norm()
    }
}

fn positive_eigen(m: &DMatrix<f64>) -> (SymmetricEigen<f64, nalgebra::Dyn>, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    (eig, max)
}

/// Inverse square root of E X Xᵀ by symmetric eigendecomposition.
pub fn whitening_map(dist: &StepDistribution) -> Result<WhiteningMap> {
    let cov = dist.second_moment_matrix().ok_or_else(|| {
        Error::InvalidDistribution(format!("{dist} has infinite second moment"))
    })?;
    whitening_from_covariance(cov)
}

pub fn whitening_from_covariance(cov: DMatrix<f64>) -> Result<WhiteningMap> {
    let d = cov.nrows();
    let (eig, max) = positive_eigen(&cov);
    let rank = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > RANK_TOLERANCE * max)
        .count();
    if rank < d || max == 0.0 {
        return Err(Error::SingularCovariance { rank, dim: d });
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let q = &eig.eigenvectors;
    let mut transform = q * inv_sqrt * q.transpose();
    transform = (&transform + transform.transpose()) * 0.5;
    Ok(WhiteningMap { transform, covariance: cov })
}

/// The law of T·X, returned with the map T.
pub fn whiten(dist: &StepDistribution) -> Result<(WhiteningMap, StepDistribution)> {
    let map = whitening_map(dist)?;
    let image = dist.linear_image(&map.transform)?;
    Ok((map, image))
}

/// Linear span of the support: rank k, a basis matrix A (d×k) and the
/// coordinate map g(x) = (AᵀA)⁻¹Aᵀx.
#[derive(Debug, Clone, PartialEq)]
pub struct GenuineDimension {
    pub rank: usize,
    pub basis: DMatrix<f64>,
    pub projector: DMatrix<f64>,
}

impl GenuineDimension {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.projector * DVector::from_column_slice(x);
        v.iter().copied().collect()
    }

    pub fn embed(&self, y: &[f64]) -> Vec<f64> {
        let v = &self.basis * DVector::from_column_slice(y);
        v.iter().copied().collect()
    }

    /// The reduced step law on R^k, g applied to every step.
    pub fn reduce(&self, dist: &StepDistribution) -> Result<StepDistribution> {
        dist.linear_image(&self.projector)
    }
}

pub fn genuine_dimension(dist: &StepDistribution) -> Result<GenuineDimension> {
    let m = dist.second_moment_matrix().ok_or_else(|| {
        Error::InvalidDistribution(format!("{dist} has infinite second moment"))
    })?;
    let d = m.nrows();
    let (eig, max) = positive_eigen(&m);
    let cols: Vec<DVector<f64>> = (0..d)
        .filter(|&i| eig.eigenvalues[i] > RANK_TOLERANCE * max)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    let rank = cols.len();
    let basis = if rank == 0 {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    let gram = basis.transpose() * &basis;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("basis Gram matrix is singular".into()))?;
    let projector = inv * basis.transpose();
    Ok(GenuineDimension { rank, basis, projector })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    #[test]
    fn identity_and_diagonal_covariances() {
        let g = StepDistribution::gaussian(3).unwrap();
        let w = whitening_map(&g).unwrap();
        assert_relative_eq!(w.transform, DMatrix::identity(3, 3), epsilon = 1e-14);

        let w = whitening_from_covariance(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]))).unwrap();
        assert_relative_eq!(w.transform[(0, 0)], 0.5, epsilon = 1e-14);
        assert_relative_eq!(w.transform[(1, 1)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(w.transform[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn triangular_lattice_whitening() {
        let tri = StepDistribution::triangular_lattice();
        let w = whitening_map(&tri).unwrap();
        // Each step has length 2 and the six directions are isotropic: Cov = 2 I.
        assert_relative_eq!(w.covariance, DMatrix::identity(2, 2) * 2.0, epsilon = 1e-14);
        assert!(w.residual() < 1e-9);
        let sym = &w.transform - w.transform.transpose();
        assert!(sym.norm() < 1e-15);
    }

    #[test]
    fn anisotropic_whitening_is_spd() {
        let d = StepDistribution::discrete(vec![
            (vec![3.0, 1.0], 0.25),
            (vec![-3.0, -1.0], 0.25),
            (vec![0.0, 2.0], 0.25),
            (vec![0.0, -2.0], 0.25),
        ])
        .unwrap();
        let (w, white) = whiten(&d).unwrap();
        assert!(w.residual() < 1e-9);
        let eig = SymmetricEigen::new(w.transform.clone());
        assert!(eig.eigenvalues.iter().all(|&l| l > 0.0));
        let m2 = white.second_moment_matrix().unwrap();
        assert!((m2 - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn singular_covariance_is_rejected() {
        let d = StepDistribution::discrete(vec![(vec![1.0, 1.0], 0.5), (vec![-1.0, -1.0], 0.5)]).unwrap();
        match whitening_map(&d) {
            Err(Error::SingularCovariance { rank: 1, dim: 2 }) => {}
            other => panic!("{other:?}"),
        }
        let msg = whitening_map(&d).unwrap_err().to_string();
        assert!(msg.contains("genuine_dimension"));
    }

    #[test]
    fn embedded_rademacher_has_rank_one() {
        let d = StepDistribution::discrete(vec![
            (vec![1.0, 0.0, 0.0], 0.5),
            (vec![-1.0, 0.0, 0.0], 0.5),
        ])
        .unwrap();
        let g = genuine_dimension(&d).unwrap();
        assert_eq!(g.rank, 1);
        assert_relative_eq!(g.project(&[1.0, 0.0, 0.0])[0].abs(), 1.0, epsilon = 1e-14);
        assert_eq!(genuine_dimension(&StepDistribution::gaussian(2).unwrap()).unwrap().rank, 2);
    }

    #[test]
    fn diagonal_support_reduces_to_line() {
        let d = StepDistribution::discrete(vec![
            (vec![1.0, 1.0], 0.2),
            (vec![-1.0, -1.0], 0.6),
            (vec![2.0, 2.0], 0.2),
        ])
        .unwrap();
        assert!(d.is_mean_zero());
        let g = genuine_dimension(&d).unwrap();
        assert_eq!(g.rank, 1);
        for (x, _) in d.atoms().unwrap() {
            let y = g.project(&x);
            let back = g.embed(&y);
            assert_relative_eq!(back[0], x[0], epsilon = 1e-12);
            assert_relative_eq!(back[1], x[1], epsilon = 1e-12);
            // Coordinate along (1,1)/√2.
            assert_relative_eq!(y[0].abs(), x[0].abs() * 2f64.sqrt(), epsilon = 1e-12);
        }
        let reduced = g.reduce(&d).unwrap();
        assert_eq!(reduced.dim(), 1);
        assert!(whitening_map(&reduced).is_ok());
    }

    #[test]
    fn whitened_empirical_covariance() {
        let mut rng = stream(17);
        for dist in [
            StepDistribution::triangular_lattice(),
            StepDistribution::gaussian(2).unwrap(),
            StepDistribution::symmetric_pareto(5.0, 1.0).unwrap(),
        ] {
            let (_, white) = whiten(&dist).unwrap();
            let d = white.dim();
            let n = 1_000_000;
            let mut acc = DMatrix::<f64>::zeros(d, d);
            let mut buf = vec![0.0; d];
            for _ in 0..n {
                white.sample_into(&mut rng, &mut buf);
                for i in 0..d {
                    for j in 0..d {
                        acc[(i, j)] += buf[i] * buf[j];
                    }
                }
            }
            acc /= n as f64;
            assert!((acc - DMatrix::identity(d, d)).norm() < 0.01, "{dist}");
        }
    }
}
