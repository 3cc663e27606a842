use serde::{Deserialize, Serialize};

/// The three Lyapunov functions used for the recurrence and transience proofs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LyapunovFn {
    /// L(x) = √|x| on R.
    SqrtAbs,
    /// f(x) = √(log‖x‖) for ‖x‖ ≥ 1, else 0, on R².
    SqrtLog,
    /// h(x) = ‖x‖^{−δ/4} for ‖x‖ ≥ 1, else 1, on R^d with d ≥ 3.
    InversePower { delta: f64 },
}

impl LyapunovFn {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            LyapunovFn::SqrtAbs => x[0].abs().sqrt(),
            LyapunovFn::SqrtLog => {
                let r = norm(x);
                if r >= 1.0 {
                    r.ln().sqrt()
                } else {
                    0.0
                }
            }
            LyapunovFn::InversePower { delta } => {
                let r = norm(x);
                if r >= 1.0 {
                    r.powf(-delta / 4.0)
                } else {
                    1.0
                }
            }
        }
    }

    /// F(x + y) − F(x), evaluated without cancellation when y is small.
    pub fn increment(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            LyapunovFn::SqrtAbs => {
                let (x, y) = (x[0], y[0]);
                let z = x + y;
                let den = z.abs().sqrt() + x.abs().sqrt();
                if den == 0.0 {
                    return 0.0;
                }
                // |x+y| − |x| is ±y exactly while x+y keeps the sign of x; the
                // rounded sum would lose the low bits of y when |y| ≪ |x|.
                let diff = if x * z > 0.0 { y * x.signum() } else { z.abs() - x.abs() };
                diff / den
            }
            LyapunovFn::SqrtLog => {
                let z = add(x, y);
                if norm(&z) < 1.0 || norm(x) < 1.0 {
                    return self.eval(&z) - self.eval(x);
                }
                let lx = norm(x).ln();
                let lz = lx + log_ratio(x, y, &z);
                let den = lz.max(0.0).sqrt() + lx.sqrt();
                if den == 0.0 {
                    0.0
                } else {
                    (lz - lx) / den
                }
            }
            LyapunovFn::InversePower { delta } => {
                let z = add(x, y);
                if norm(&z) < 1.0 || norm(x) < 1.0 {
                    return self.eval(&z) - self.eval(x);
                }
                norm(x).powf(-delta / 4.0) * (-delta / 4.0 * log_ratio(x, y, &z)).exp_m1()
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p + q).collect()
}

/// log‖x + y‖ − log‖x‖.
fn log_ratio(x: &[f64], y: &[f64], z: &[f64]) -> f64 {
    let nx2 = dot(x, x);
    let u = (2.0 * dot(x, y) + dot(y, y)) / nx2;
    if u.abs() < 0.5 {
        0.5 * u.ln_1p()
    } else {
        0.5 * (dot(z, z) / nx2).ln()
    }
}

/// E_ε(x) membership: ‖y‖ ≤ ‖x‖^{1−ε}.
pub fn in_e_eps(x: &[f64], y: &[f64], epsilon: f64) -> bool {
    norm(y) <= norm(x).powf(1.0 - epsilon)
}

/// Right-hand side of the bound on L(x+y) − L(x).
pub fn sqrt_abs_rhs(x: f64, y: f64, epsilon: f64, c: f64) -> f64 {
    let t = y / x;
    let jump = if y.abs() > epsilon * x.abs() { c * t * t } else { 0.0 };
    x.abs().sqrt() * (t / 2.0 - t * t / 10.0 + jump)
}

/// Global bound 1 + ‖y‖/‖x‖ on f(x+y) − f(x).
pub fn sqrt_log_global_rhs(x: &[f64], y: &[f64]) -> f64 {
    1.0 + norm(y) / norm(x)
}

/// Second-order bound on f(x+y) − f(x) for ‖x‖ ≥ r and y ∈ E_ε(x).
pub fn sqrt_log_local_rhs(x: &[f64], y: &[f64], epsilon: f64, c: f64) -> f64 {
    let nx2 = dot(x, x);
    let nx = nx2.sqrt();
    let l = nx.ln();
    let a = dot(x, y) / nx2;
    let b = dot(y, y) / nx2;
    let corr = c * dot(y, y) / nx.powf(2.0 + epsilon);
    (a + b / 2.0 - a * a + corr) / (2.0 * l.sqrt()) - a * a / (8.0 * l.powf(1.5))
        + corr / l.powf(1.5)
}

/// Second-order bound on h(x+y) − h(x), with prefactor −δ/(4‖x‖^p).
/// The Taylor expansion of h gives p = 2 + δ/4.
pub fn inverse_power_rhs(x: &[f64], y: &[f64], delta: f64, epsilon: f64, c: f64, p: f64) -> f64 {
    let nx2 = dot(x, x);
    let nx = nx2.sqrt();
    let xy = dot(x, y);
    let yy = dot(y, y);
    let inner = xy + yy / 2.0 - (1.0 + delta / 8.0) * xy * xy / nx2 - c * yy / nx.powf(epsilon);
    -delta / (4.0 * nx.powf(p)) * inner
}
