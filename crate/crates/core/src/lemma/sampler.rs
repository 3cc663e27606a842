//! Stratified sample points for the deterministic inequalities.
//!
//! Sample `i` is drawn from stratum `i % STRATA` of its region, so every
//! stratum gets the same share. The strata target the places where the bounds
//! are tight: truncation boundaries, alignment extremes and the unit sphere
//! where the piecewise functions switch branch.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::functions::{dot, in_e_eps, norm};
use crate::rng::Stream;

/// Sample count and seed for one certification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampler {
    pub samples: usize,
    pub seed: u64,
}

impl Sampler {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed }
    }
}

impl Default for Sampler {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 0 }
    }
}

pub(crate) const STRATA: usize = 6;

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Unit vector at angle θ from the unit vector `u`.
fn at_angle<R: Rng + ?Sized>(rng: &mut R, u: &[f64], theta: f64) -> Vec<f64> {
    let w = loop {
        let v = unit_vector(rng, u.len());
        let p = dot(&v, u);
        let w: Vec<f64> = v.iter().zip(u).map(|(a, b)| a - p * b).collect();
        let n = norm(&w);
        if n > 1e-6 {
            break w.into_iter().map(|x| x / n).collect::<Vec<_>>();
        }
    };
    u.iter().zip(&w).map(|(a, b)| theta.cos() * a + theta.sin() * b).collect()
}

/// Direction of y relative to x̂: uniform, near ±x̂, or near the orthogonal complement.
fn direction<R: Rng + ?Sized>(rng: &mut R, u: &[f64], kind: usize) -> Vec<f64> {
    let tilt = log_uniform(rng, 1e-7, 1e-1);
    match kind % 3 {
        0 => unit_vector(rng, u.len()),
        1 => {
            let theta = if rng.random::<bool>() { tilt } else { std::f64::consts::PI - tilt };
            at_angle(rng, u, theta)
        }
        _ => {
            let theta = std::f64::consts::FRAC_PI_2 + sign(rng) * tilt;
            at_angle(rng, u, theta)
        }
    }
}

/// (x, y) on the line: |x| log-uniform on [1e-3, 1e6], y = t·x.
pub(crate) fn line_point(rng: &mut Stream, stratum: usize, epsilon: f64) -> (f64, f64) {
    let x = sign(rng) * log_uniform(rng, 1e-3, 1e6);
    let t = match stratum {
        0 | 1 => sign(rng) * log_uniform(rng, 1e-8, 1e4),
        // Within 1% of the indicator switch |y| = ε|x|.
        2 | 3 => sign(rng) * epsilon * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0)),
        // x + y close to 0.
        4 => -1.0 + sign(rng) * log_uniform(rng, 1e-9, 1.0),
        _ => sign(rng) * log_uniform(rng, 1e-12, 1e-4),
    };
    (x, t * x)
}

/// (x, y) ∈ R^d × R^d with x ≠ 0 and no constraint on y.
pub(crate) fn global_point(rng: &mut Stream, stratum: usize, d: usize) -> (Vec<f64>, Vec<f64>) {
    let nx = log_uniform(rng, 1e-3, 1e6);
    let u = unit_vector(rng, d);
    let x: Vec<f64> = u.iter().map(|a| a * nx).collect();
    let y = if stratum < 3 {
        let ny = nx * log_uniform(rng, 1e-8, 1e4);
        direction(rng, &u, stratum).into_iter().map(|a| a * ny).collect()
    } else {
        // x + y near the unit sphere, where the piecewise definitions switch.
        let target = 1.0 + sign(rng) * log_uniform(rng, 1e-10, 0.5);
        let v = direction(rng, &u, stratum);
        v.iter().zip(&x).map(|(a, b)| a * target - b).collect()
    };
    (x, y)
}

/// (x, y) with ‖x‖ ≥ r and y ∈ E_ε(x). ‖x‖ is r·10^{6U}, or within 1% above r
/// in the boundary strata; ‖y‖/‖x‖^{1−ε} is log-uniform on [1e-6, 1] or in
/// the slab [0.99, 1].
pub(crate) fn local_point(
    rng: &mut Stream,
    stratum: usize,
    d: usize,
    r: f64,
    epsilon: f64,
) -> (Vec<f64>, Vec<f64>) {
    loop {
        let nx = if stratum == 5 {
            r * (1.0 + 0.01 * rng.random::<f64>())
        } else {
            r * log_uniform(rng, 1.0, 1e6)
        };
        let u = unit_vector(rng, d);
        let x: Vec<f64> = u.iter().map(|a| a * nx).collect();
        let scale = if stratum.is_multiple_of(2) {
            log_uniform(rng, 1e-6, 1.0)
        } else {
            1.0 - 0.01 * rng.random::<f64>()
        };
        let ny = scale * nx.powf(1.0 - epsilon);
        let y: Vec<f64> = direction(rng, &u, stratum).into_iter().map(|a| a * ny).collect();
        if in_e_eps(&x, &y, epsilon) && norm(&x) >= r {
            return (x, y);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn local_points_respect_region() {
        let mut rng = stream(5);
        for i in 0..20_000 {
            let (x, y) = local_point(&mut rng, i % STRATA, 3, 7.0, 0.125);
            assert!(norm(&x) >= 7.0);
            assert!(norm(&y) <= norm(&x).powf(0.875));
        }
    }

    #[test]
    fn strata_hit_their_targets() {
        let mut rng = stream(6);
        let eps = 0.3;
        let near_switch = (0..1000)
            .map(|_| line_point(&mut rng, 2, eps))
            .filter(|(x, y)| ((y / x).abs() / eps - 1.0).abs() <= 0.01)
            .count();
        assert_eq!(near_switch, 1000);
        let aligned = (0..1000)
            .map(|_| local_point(&mut rng, 1, 2, 3.0, 0.1))
            .filter(|(x, y)| (dot(x, y) / (norm(x) * norm(y))).abs() > 0.99)
            .count();
        assert_eq!(aligned, 1000);
        let orth = (0..1000)
            .map(|_| local_point(&mut rng, 2, 4, 3.0, 0.1))
            .filter(|(x, y)| (dot(x, y) / (norm(x) * norm(y))).abs() < 0.11)
            .count();
        assert_eq!(orth, 1000);
    }
}
