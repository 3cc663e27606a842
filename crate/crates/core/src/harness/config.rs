//! TOML experiment plans.
//!
//! ```toml
//! seed = 42
//! threads = 4
//! out = "results"
//!
//! [[cell]]
//! alpha = [0.0, 0.25, 0.5]      # one number or a list; a list expands to one cell per value
//! dist = "gaussian(d=3)"
//! n = 1e6
//! replicas = 200
//! whiten = true                 # optional, default false
//! diagnostics = ["escape_exponent", "returns(r=1)"]
//! schedule = { start = 64, ratio = 2.0 }   # or an explicit list of times
//! mode = "auto"                 # full, counts or auto
//! ```
//!
//! Errors carry the byte offset of the offending text in the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use super::{CellSpec, Diagnostic, ExperimentPlan};
use crate::error::{Error, ParseError, Result};
use crate::model::StepDistribution;
use crate::walk::{Schedule, WalkMode};

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Count {
    Int(u64),
    Float(f64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSchedule {
    Geometric { start: u64, ratio: f64 },
    Explicit(Vec<u64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    alpha: OneOrMany,
    dist: Spanned<String>,
    n: Spanned<Count>,
    replicas: Spanned<Count>,
    #[serde(default)]
    whiten: bool,
    #[serde(default)]
    diagnostics: Vec<Spanned<String>>,
    schedule: Option<RawSchedule>,
    #[serde(default)]
    mode: WalkMode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    #[serde(default)]
    seed: u64,
    threads: Option<usize>,
    out: Option<PathBuf>,
    #[serde(default)]
    cell: Vec<RawCell>,
}

fn count(input: &str, c: &Spanned<Count>) -> Result<u64> {
    match *c.get_ref() {
        Count::Int(v) => Ok(v),
        Count::Float(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        Count::Float(v) => Err(ParseError::new(input, c.span().start, format!("{v} is not a whole count")).into()),
    }
}

/// Offset of the first character inside a quoted TOML string value.
fn inner_start(input: &str, s: &Spanned<String>) -> usize {
    let start = s.span().start;
    match input.as_bytes().get(start) {
        Some(b'"') | Some(b'\'') => start + 1,
        _ => start,
    }
}

pub fn parse_plan(input: &str) -> Result<ExperimentPlan> {
    let raw: RawPlan = toml::from_str(input).map_err(|e| {
        let pos = e.span().map(|s| s.start).unwrap_or(0);
        Error::Parse(ParseError::new(input, pos, e.message().to_string()))
    })?;
    let mut cells = Vec::new();
    for c in &raw.cell {
        let dist: StepDistribution = c.dist.get_ref().parse().map_err(|e| match e {
            Error::Parse(pe) => {
                Error::Parse(ParseError::new(input, inner_start(input, &c.dist) + pe.position, pe.message))
            }
            other => Error::Parse(ParseError::new(input, inner_start(input, &c.dist), other.to_string())),
        })?;
        let diagnostics = c
            .diagnostics
            .iter()
            .map(|d| {
                d.get_ref()
                    .parse::<Diagnostic>()
                    .map_err(|m| Error::Parse(ParseError::new(input, inner_start(input, d), m)))
            })
            .collect::<Result<Vec<_>>>()?;
        let schedule = match &c.schedule {
            None => Schedule::default(),
            Some(RawSchedule::Geometric { start, ratio }) => Schedule::Geometric { start: *start, ratio: *ratio },
            Some(RawSchedule::Explicit(v)) => Schedule::Explicit(v.clone()),
        };
        let alphas = match &c.alpha {
            OneOrMany::One(a) => vec![*a],
            OneOrMany::Many(v) => v.clone(),
        };
        let (n, replicas) = (count(input, &c.n)?, count(input, &c.replicas)?);
        for alpha in alphas {
            let mut cell = CellSpec::new(alpha, dist.clone(), n, replicas)
                .with_schedule(schedule.clone())
                .with_mode(c.mode);
            cell.whiten = c.whiten;
            if !diagnostics.is_empty() {
                cell.diagnostics = diagnostics.clone();
            }
            cell.validate().map_err(|e| {
                Error::Parse(ParseError::new(input, c.dist.span().start, format!("invalid cell: {e}")))
            })?;
            cells.push(cell);
        }
    }
    Ok(ExperimentPlan { seed: raw.seed, threads: raw.threads, out: raw.out, cells })
}

pub fn load_plan(path: &Path) -> Result<ExperimentPlan> {
    parse_plan(&std::fs::read_to_string(path)?)
}
