use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StepDistribution;
use crate::stats::{
    angular_series, default_radius, escape_exponent, lil_ratio, xn, DeltaObserver, DiagnosticsReport,
    Functional, FunctionalSpec, ReturnCounter,
};
use crate::walk::{CheckpointSeries, Observer};

/// A per-replica measurement. Written in configs and on the command line as
/// `name` or `name(param)`:
///
/// | text | series | final scalars |
/// |---|---|---|
/// | `norm` | `norm` | `norm` |
/// | `position` | `pos0`, `pos1`, .. | same |
/// | `norm2` | `norm2` (‖S_n‖²) | `norm2` |
/// | `escape_exponent` | | `escape_exponent`, `final_ratio` |
/// | `returns` or `returns(r)` | `returns` | `returns`, `liminf` |
/// | `tail_oscillation` | | `tail_oscillation` |
/// | `xn` or `xn(kappa)` | `xn` | `xn` |
/// | `scaled_norm` | `scaled_norm` (‖S_n‖/n^α), `cauchy` | `scaled_norm` |
/// | `delta(h)` with h = `coordK`, `norm2`, `normpow=q`, `tail=K` | `delta_<h>` | `delta_<h>` |
/// | `lil` | `lil_ratio` | `lil_max` |
///
/// `cauchy` at checkpoint k is ‖S_{t_k}/t_k^α − S_{t_{k−1}}/t_{k−1}^α‖, with
/// the term before the first checkpoint taken as 0. `liminf` is min ‖S_k‖ over
/// n/2 ≤ k ≤ n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Diagnostic {
    Norm,
    Position,
    NormSquared,
    EscapeExponent,
    Returns { radius: Option<f64> },
    TailOscillation,
    Xn { kappa: f64 },
    ScaledNorm,
    Delta(Functional),
    Lil,
}

pub const DEFAULT_KAPPA: f64 = 0.9;

impl Diagnostic {
    pub(crate) fn validate(&self, alpha: f64, law: &StepDistribution) -> Result<()> {
        match *self {
            Diagnostic::Returns { radius: Some(r) } if !(r > 0.0) => {
                Err(Error::InvalidParameter(format!("return radius must be positive, got {r}")))
            }
            Diagnostic::Xn { kappa } if !(kappa > 0.0 && kappa < 1.0) => {
                Err(Error::InvalidParameter(format!("kappa must lie in (0, 1), got {kappa}")))
            }
            Diagnostic::Delta(Functional::Coordinate(i)) if i >= law.dim() => Err(Error::InvalidParameter(
                format!("coordinate {i} out of range for dimension {}", law.dim()),
            )),
            Diagnostic::Lil if law.dim() != 1 || alpha > 0.5 || law.second_moment().is_none() => {
                Err(Error::InvalidParameter(
                    "lil needs d = 1, alpha ≤ 1/2 and a finite second moment".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn observer<'a>(&self, n: u64, law: &StepDistribution) -> Option<Box<dyn Observer + 'a>> {
        match *self {
            Diagnostic::Returns { radius } => {
                let r = radius.unwrap_or_else(|| default_radius(law));
                Some(Box::new(ReturnCounter::new(r, n.div_ceil(2))))
            }
            Diagnostic::Delta(f) => Some(Box::new(DeltaObserver::new(vec![FunctionalSpec::new(f, law)]))),
            _ => None,
        }
    }

    pub(crate) fn record(
        &self,
        series: &CheckpointSeries,
        alpha: f64,
        law: &StepDistribution,
        out: &mut DiagnosticsReport,
    ) -> Result<()> {
        let ns = series.times();
        let norms: Vec<f64> = series.records.iter().map(|r| r.norm).collect();
        let column = |name: &str| -> Result<Vec<f64>> {
            let k = series
                .column(name)
                .ok_or_else(|| Error::InvalidParameter(format!("observer column {name} missing")))?;
            Ok(series.records.iter().map(|r| r.values[k]).collect())
        };
        let mut put = |name: &str, values: Vec<f64>| -> Result<()> {
            let last = *values.last().expect("at least one checkpoint");
            out.add_series(name, values)?;
            out.add_summary(name, last)
        };
        match *self {
            Diagnostic::Norm => put("norm", norms)?,
            Diagnostic::Position => {
                for i in 0..series.d {
                    put(&format!("pos{i}"), series.records.iter().map(|r| r.position[i]).collect())?;
                }
            }
            Diagnostic::NormSquared => put("norm2", norms.iter().map(|r| r * r).collect())?,
            Diagnostic::EscapeExponent => {
                let e = escape_exponent(&ns, &norms)?;
                out.add_summary("escape_exponent", e.slope)?;
                out.add_summary("final_ratio", e.final_ratio)?;
            }
            Diagnostic::Returns { .. } => {
                let returns = column("returns")?;
                let liminf = *column("liminf")?.last().expect("checkpoint");
                put("returns", returns)?;
                out.add_summary("liminf", liminf)?;
            }
            Diagnostic::TailOscillation => {
                let positions: Vec<Vec<f64>> = series.records.iter().map(|r| r.position.clone()).collect();
                out.add_summary("tail_oscillation", angular_series(&positions).tail_oscillation)?;
            }
            Diagnostic::Xn { kappa } => {
                if ns[0] < 2 {
                    return Err(Error::InvalidParameter("x_n needs checkpoints ≥ 2".into()));
                }
                put("xn", ns.iter().zip(&norms).map(|(&n, &r)| xn(n, r, kappa)).collect())?
            }
            Diagnostic::ScaledNorm => {
                let scaled: Vec<Vec<f64>> = series
                    .records
                    .iter()
                    .map(|r| {
                        let s = (r.n as f64).powf(alpha);
                        r.position.iter().map(|x| x / s).collect()
                    })
                    .collect();
                let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let mut prev = vec![0.0; series.d];
                let mut cauchy = Vec::with_capacity(scaled.len());
                for y in &scaled {
                    let diff: Vec<f64> = y.iter().zip(&prev).map(|(a, b)| a - b).collect();
                    cauchy.push(norm(&diff));
                    prev.clone_from(y);
                }
                put("scaled_norm", scaled.iter().map(|y| norm(y)).collect())?;
                out.add_series("cauchy", cauchy)?;
            }
            Diagnostic::Delta(f) => {
                let spec = FunctionalSpec::new(f, law);
                let name = format!("delta_{}", spec.name());
                put(&name, column(&name)?)?;
                if let Some(w) = spec.warning {
                    out.warnings.push(w);
                }
            }
            Diagnostic::Lil => {
                let mean = law.mean()[0];
                let var = law.second_moment().expect("validated") - mean * mean;
                let pos: Vec<f64> = series.records.iter().map(|r| r.position[0]).collect();
                let lil = lil_ratio(&ns, &pos, mean, alpha, var)?;
                // Checkpoints before the normaliser is defined read as 0.
                let mut values = vec![0.0; ns.len() - lil.ratios.len()];
                values.extend(&lil.ratios);
                out.add_series("lil_ratio", values)?;
                out.add_summary("lil_max", lil.max())?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Diagnostic::Norm => f.write_str("norm"),
            Diagnostic::Position => f.write_str("position"),
            Diagnostic::NormSquared => f.write_str("norm2"),
            Diagnostic::EscapeExponent => f.write_str("escape_exponent"),
            Diagnostic::Returns { radius: None } => f.write_str("returns"),
            Diagnostic::Returns { radius: Some(r) } => write!(f, "returns({r})"),
            Diagnostic::TailOscillation => f.write_str("tail_oscillation"),
            Diagnostic::Xn { kappa } => write!(f, "xn({kappa})"),
            Diagnostic::ScaledNorm => f.write_str("scaled_norm"),
            Diagnostic::Delta(h) => match h {
                Functional::Coordinate(i) => write!(f, "delta(coord{i})"),
                Functional::NormSquared => f.write_str("delta(norm2)"),
                Functional::CrossMoment(i, j) => write!(f, "delta(cross{i}{j})"),
                Functional::NormPower(q) => write!(f, "delta(normpow={q})"),
                Functional::TailIndicator(k) => write!(f, "delta(tail={k})"),
            },
            Diagnostic::Lil => f.write_str("lil"),
        }
    }
}

fn number(s: &str, what: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("{what}: expected a number, got `{s}`"))
}

fn functional(s: &str) -> std::result::Result<Functional, String> {
    let s = s.trim();
    if s == "norm2" {
        return Ok(Functional::NormSquared);
    }
    if let Some(i) = s.strip_prefix("coord") {
        return i.parse().map(Functional::Coordinate).map_err(|_| format!("bad coordinate `{s}`"));
    }
    if let Some(ij) = s.strip_prefix("cross") {
        let digits: Vec<usize> = ij.chars().filter_map(|c| c.to_digit(10).map(|d| d as usize)).collect();
        if digits.len() == 2 && ij.len() == 2 {
            return Ok(Functional::CrossMoment(digits[0], digits[1]));
        }
        return Err(format!("bad cross moment `{s}`"));
    }
    if let Some(q) = s.strip_prefix("normpow=") {
        return number(q, "normpow").map(Functional::NormPower);
    }
    if let Some(k) = s.strip_prefix("tail=") {
        return number(k, "tail").map(Functional::TailIndicator);
    }
    Err(format!("unknown functional `{s}`; expected coordK, norm2, crossIJ, normpow=q or tail=K"))
}

impl FromStr for Diagnostic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (name, arg) = match s.find('(') {
            Some(i) => {
                let inner = s[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| format!("missing `)` in `{s}`"))?;
                (&s[..i], Some(inner))
            }
            None => (s, None),
        };
        let strip = |a: &str, key: &str| a.trim().strip_prefix(key).unwrap_or(a).to_string();
        Ok(match (name.trim(), arg) {
            ("norm", None) => Diagnostic::Norm,
            ("position", None) => Diagnostic::Position,
            ("norm2", None) => Diagnostic::NormSquared,
            ("escape_exponent", None) => Diagnostic::EscapeExponent,
            ("returns", None) => Diagnostic::Returns { radius: None },
            ("returns", Some(a)) => Diagnostic::Returns { radius: Some(number(&strip(a, "r="), "radius")?) },
            ("tail_oscillation", None) => Diagnostic::TailOscillation,
            ("xn", None) => Diagnostic::Xn { kappa: DEFAULT_KAPPA },
            ("xn", Some(a)) => Diagnostic::Xn { kappa: number(&strip(a, "kappa="), "kappa")? },
            ("scaled_norm", None) => Diagnostic::ScaledNorm,
            ("delta", Some(a)) => Diagnostic::Delta(functional(a)?),
            ("lil", None) => Diagnostic::Lil,
            _ => return Err(format!("unknown diagnostic `{s}`")),
        })
    }
}

impl TryFrom<String> for Diagnostic {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Diagnostic> for String {
    fn from(d: Diagnostic) -> String {
        d.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        for d in [
            Diagnostic::Norm,
            Diagnostic::Position,
            Diagnostic::NormSquared,
            Diagnostic::EscapeExponent,
            Diagnostic::Returns { radius: None },
            Diagnostic::Returns { radius: Some(2.5) },
            Diagnostic::TailOscillation,
            Diagnostic::Xn { kappa: 0.9 },
            Diagnostic::ScaledNorm,
            Diagnostic::Delta(Functional::Coordinate(1)),
            Diagnostic::Delta(Functional::NormSquared),
            Diagnostic::Delta(Functional::CrossMoment(0, 1)),
            Diagnostic::Delta(Functional::NormPower(1.5)),
            Diagnostic::Delta(Functional::TailIndicator(3.0)),
            Diagnostic::Lil,
        ] {
            assert_eq!(d.to_string().parse::<Diagnostic>().unwrap(), d);
        }
        assert_eq!("xn(kappa=0.8)".parse::<Diagnostic>().unwrap(), Diagnostic::Xn { kappa: 0.8 });
        assert_eq!("xn".parse::<Diagnostic>().unwrap(), Diagnostic::Xn { kappa: DEFAULT_KAPPA });
        assert!("returns(".parse::<Diagnostic>().is_err());
        assert!("delta(foo)".parse::<Diagnostic>().is_err());
        assert!("speed".parse::<Diagnostic>().is_err());
    }

    #[test]
    fn scaled_norm_and_cauchy_on_a_fixed_walk() {
        // α = 1: S_n = n·X_1, so S_n/n is constant after the first checkpoint.
        let cell = super::super::CellSpec::new(1.0, StepDistribution::rademacher(), 1000, 1)
            .with_diagnostics(vec![Diagnostic::ScaledNorm]);
        let rep = super::super::run_replicas(&cell, 1).unwrap().remove(0);
        assert!(rep.series["scaled_norm"].iter().all(|&v| v == 1.0));
        let c = &rep.series["cauchy"];
        assert_eq!(c[0], 1.0);
        assert!(c[1..].iter().all(|&v| v == 0.0));
    }
}
