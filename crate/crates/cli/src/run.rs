use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use srrw_core::harness::{
    equivalence_suite, exit_time_scaling, load_plan, long_csv, moment_check, run_replicas, sweep_phase_diagram,
    with_threads, CellResult, CellSpec, Diagnostic, EquivalenceSettings, ExitSettings, ExperimentPlan, Provenance, SweepTable,
};
use srrw_core::lemma::{
    certification_suite, certify, find_constants, taylor_radius, CertificationResult, Inequality, Sampler,
    SearchExhausted, SearchGrid, SUITE_EPSILON_F, SUITE_EPSILON_H,
};
use srrw_core::model::StepDistribution;
use srrw_core::walk::{Schedule, WalkMode};
use srrw_core::Error;

use crate::args::{
    split_top_level, Cli, Command, EquivalenceArgs, ExitArgs, InequalityName, LemmaArgs, Mode, MomentsArgs,
    SimulateArgs, SweepArgs,
};

/// Verdict of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// Usage errors exit with 2, anything else that stops a run with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::InvalidParameter(_)
            | Error::InvalidDistribution(_)
            | Error::SingularCovariance { .. }
            | Error::TooLarge(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Result<T> = std::result::Result<T, Failure>;

struct Context {
    seed: u64,
    threads: Option<usize>,
    out: Option<PathBuf>,
    plan: Option<ExperimentPlan>,
}

impl Context {
    /// Writes `name` into the output directory. Without one, the primary
    /// output goes to stdout and the rest is dropped.
    fn emit(&self, name: &str, content: &str, primary: bool) -> Result<()> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let path = dir.join(name);
                fs::write(&path, content)?;
                eprintln!("wrote {}", path.display());
            }
            None if primary => print!("{content}"),
            None => {}
        }
        Ok(())
    }

    fn json(&self, name: &str, provenance: &Provenance, report: &impl Serialize, primary: bool) -> Result<()> {
        let text = serde_json::to_string_pretty(&json!({ "provenance": provenance, "report": report }))?;
        self.emit(name, &(text + "\n"), primary)
    }

    fn threads<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        with_threads(self.threads, f)?
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let plan = match &cli.config {
        Some(path) => Some(load_plan(path).map_err(|e| config_error(path, e))?),
        None => None,
    };
    let ctx = Context {
        seed: cli.seed.or(plan.as_ref().map(|p| p.seed)).unwrap_or(0),
        threads: cli.threads.or(plan.as_ref().and_then(|p| p.threads)),
        out: cli.out.or(plan.as_ref().and_then(|p| p.out.clone())),
        plan,
    };
    match &cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Sweep(a) => sweep(&ctx, a),
        Command::Equivalence(a) => equivalence(&ctx, a),
        Command::LemmaCheck(a) => lemma_check(&ctx, a),
        Command::Moments(a) => moments(&ctx, a),
        Command::ExitTimes(a) => exit_times(&ctx, a),
    }
}

fn config_error(path: &Path, e: Error) -> Failure {
    match e {
        Error::Parse(_) => Failure::Usage(format!("{}: {e}", path.display())),
        Error::Io(io) => Failure::Usage(format!("cannot read {}: {io}", path.display())),
        other => Failure::Usage(format!("{}: {other}", path.display())),
    }
}

/// Parses a step law, completing a bare `gaussian` or `lattice` with `d`.
fn resolve_dist(text: &str, d: Option<usize>) -> Result<StepDistribution> {
    let text = text.trim();
    let full = match d {
        Some(d) if matches!(text, "gaussian" | "lattice") => format!("{text}(d={d})"),
        _ => text.to_string(),
    };
    let dist: StepDistribution = full.parse().map_err(|e| Failure::Usage(format!("--dist: {e}")))?;
    if let Some(d) = d {
        if dist.dim() != d {
            return Err(Failure::Usage(format!("--dist {full} has dimension {}, not --d {d}", dist.dim())));
        }
    }
    Ok(dist)
}

fn diagnostics(text: &str) -> Result<Vec<Diagnostic>> {
    split_top_level(text)
        .into_iter()
        .map(|d| d.parse().map_err(|e| Failure::Usage(format!("--diagnostics: {e}"))))
        .collect()
}

fn simulate(ctx: &Context, a: &SimulateArgs) -> Result<Outcome> {
    let mut cells = match &ctx.plan {
        Some(plan) if !plan.cells.is_empty() => plan.cells.clone(),
        _ => {
            let missing: Vec<&str> = [("--alpha", a.alpha.is_none()), ("--dist", a.dist.is_none()), ("--n", a.n.is_none())]
                .into_iter()
                .filter_map(|(name, absent)| absent.then_some(name))
                .collect();
            if !missing.is_empty() {
                return Err(Failure::Usage(format!(
                    "simulate needs {} (or a --config with cells)",
                    missing.join(", ")
                )));
            }
            vec![CellSpec::new(a.alpha.unwrap_or_default(), StepDistribution::rademacher(), 1, 1)
                .with_diagnostics(vec![Diagnostic::Norm, Diagnostic::Position])]
        }
    };
    let dist = a.dist.as_deref().map(|d| resolve_dist(d, a.d)).transpose()?;
    let diags = a.diagnostics.as_deref().map(diagnostics).transpose()?;
    for cell in &mut cells {
        if let Some(alpha) = a.alpha {
            cell.alpha = alpha;
        }
        if let Some(dist) = &dist {
            cell.dist = dist.clone();
        }
        if let Some(n) = a.n {
            cell.n = n;
        }
        if let Some(r) = a.replicas {
            cell.replicas = r;
        }
        if a.whiten {
            cell.whiten = true;
        }
        if let Some(d) = &diags {
            cell.diagnostics = d.clone();
        }
        if a.checkpoint_start.is_some() || a.checkpoint_ratio.is_some() {
            let (start, ratio) = match cell.schedule {
                Schedule::Geometric { start, ratio } => (start, ratio),
                Schedule::Explicit(_) => (64, 2.0),
            };
            cell.schedule = Schedule::Geometric {
                start: a.checkpoint_start.unwrap_or(start),
                ratio: a.checkpoint_ratio.unwrap_or(ratio),
            };
        }
        if let Some(m) = a.mode {
            cell.mode = match m {
                Mode::Full => WalkMode::Full,
                Mode::Counts => WalkMode::Counts,
                Mode::Auto => WalkMode::Auto,
            };
        }
        cell.validate()?;
    }
    let results = ctx.threads(|| {
        cells
            .iter()
            .map(|c| Ok(CellResult { cell: c.clone(), replicas: run_replicas(c, ctx.seed)? }))
            .collect::<Result<Vec<_>>>()
    })?;
    let prov = Provenance::new(ctx.seed, &json!({ "command": "simulate", "cells": cells }));
    ctx.emit("simulate.csv", &long_csv(&results, &prov)?, true)?;
    let table = SweepTable::from_results(&results);
    ctx.emit("summary.csv", &table.to_csv(&prov)?, false)?;
    ctx.emit("summary.json", &(table.to_json(&prov)? + "\n"), false)?;
    Ok(Outcome::Pass)
}

fn sweep(ctx: &Context, a: &SweepArgs) -> Result<Outcome> {
    let dist = resolve_dist(&a.dist, a.d)?;
    if let Some(bad) = a.alpha.0.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Failure::Usage(format!("--alpha: {bad} lies outside [0, 1]")));
    }
    let pd = ctx.threads(|| Ok(sweep_phase_diagram(&a.alpha.0, &dist, a.n, a.replicas, ctx.seed)?))?;
    let prov = Provenance::new(ctx.seed, &json!({ "command": "sweep", "args": a, "dist": dist.to_string() }));
    ctx.emit("sweep.csv", &pd.table.to_csv(&prov)?, true)?;
    ctx.emit("sweep.json", &(pd.table.to_json(&prov)? + "\n"), false)?;
    if a.emit_plot_data {
        let dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir)?;
        let path = dir.join(pd.figure_name());
        fs::write(&path, pd.plot_csv(&prov)?)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(Outcome::Pass)
}

fn equivalence(ctx: &Context, a: &EquivalenceArgs) -> Result<Outcome> {
    let dist = resolve_dist(&a.dist, None)?;
    let settings = EquivalenceSettings {
        n_small: a.n as usize,
        alphas: a.alpha.0.clone(),
        n_large: a.n_large,
        samples: a.samples as usize,
        level: a.level,
        bins: a.bins,
        seed: ctx.seed,
    };
    let rep = ctx.threads(|| Ok(equivalence_suite(&dist, &settings)?))?;
    let exact_ok = rep.exact.iter().filter(|c| c.pass).count();
    println!("exact: {exact_ok}/{} comparisons agree to 1e-12", rep.exact.len());
    if let Some(m) = rep.first_mismatch() {
        println!(
            "  mismatch at alpha={} n={}: atom {:?} walk {} forest {} (diff {:e})",
            m.alpha, m.n, m.worst_atom, m.walk_probability, m.forest_probability, m.max_diff
        );
    }
    for s in &rep.sampled {
        println!(
            "sampled alpha={} n={}: chi2={:.2} dof={} p={:.4} {}",
            s.alpha,
            s.n,
            s.test.statistic,
            s.test.dof,
            s.test.p_value,
            if s.pass { "ok" } else { "REJECTED" }
        );
    }
    println!("equivalence: {}", if rep.pass { "PASS" } else { "FAIL" });
    let prov = Provenance::new(ctx.seed, &json!({ "command": "equivalence", "args": a }));
    ctx.json("equivalence.json", &prov, &rep, false)?;
    Ok(Outcome::from_pass(rep.pass))
}

fn describe(r: &CertificationResult) -> String {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| x.to_string());
    format!(
        "{} eps={} r={} C={}: {} ({} violations over {} samples, max violation {:e})",
        r.inequality,
        r.constants.epsilon,
        opt(r.constants.r),
        opt(r.constants.c),
        if r.pass { "PASS" } else { "FAIL" },
        r.violations,
        r.samples,
        r.max_violation
    )
}

fn print_search(s: &std::result::Result<CertificationResult, SearchExhausted>) {
    match s {
        Ok(r) => println!("{}", describe(r)),
        Err(e) => print!("{e}"),
    }
}

fn lemma_check(ctx: &Context, a: &LemmaArgs) -> Result<Outcome> {
    let sampler = Sampler::new(a.samples as usize, ctx.seed);
    let prov = Provenance::new(ctx.seed, &json!({ "command": "lemma-check", "args": a }));
    let Some(name) = a.inequality else {
        if a.r.is_some() || a.c.is_some() || a.epsilon.is_some() {
            return Err(Failure::Usage("--epsilon, --r and --c need --inequality".into()));
        }
        let rep = ctx.threads(|| Ok(certification_suite(&a.d, &SearchGrid::default(), &sampler)?))?;
        println!("proof constants: {}", describe(&rep.proof_constants));
        rep.searches.iter().for_each(print_search);
        println!("lemma-check: {}", if rep.pass { "PASS" } else { "FAIL" });
        ctx.json("lemma.json", &prov, &rep, false)?;
        return Ok(Outcome::from_pass(rep.pass));
    };
    let ineqs: Vec<Inequality> = match name {
        InequalityName::SqrtAbs => vec![Inequality::SqrtAbs],
        InequalityName::SqrtLogGlobal => vec![Inequality::SqrtLogGlobal],
        InequalityName::SqrtLogLocal => vec![Inequality::SqrtLogLocal],
        InequalityName::InversePower => {
            a.d.iter().map(|&d| Inequality::InversePower { delta: a.delta, d }).collect()
        }
    };
    let results = ctx.threads(|| {
        ineqs
            .iter()
            .map(|&ineq| {
                let eps = a.epsilon.unwrap_or(match ineq {
                    Inequality::SqrtAbs => taylor_radius(),
                    Inequality::InversePower { .. } => SUITE_EPSILON_H,
                    _ => SUITE_EPSILON_F,
                });
                let direct = (!ineq.uses_radius() || a.r.is_some()) && (!ineq.uses_constant() || a.c.is_some());
                if direct {
                    let r = a.r.unwrap_or(f64::NAN);
                    let c = a.c.unwrap_or(f64::NAN);
                    let res = certify(ineq, eps, r, c, &sampler)?;
                    Ok(if res.pass { Ok(res) } else { Err(SearchExhausted { inequality: ineq, epsilon: eps, attempts: vec![res] }) })
                } else {
                    let default = SearchGrid::default();
                    let grid = SearchGrid {
                        r: a.r.map_or(default.r, |r| vec![r]),
                        c: a.c.map_or(default.c, |c| vec![c]),
                    };
                    Ok(find_constants(ineq, eps, &grid, &sampler)?)
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;
    results.iter().for_each(print_search);
    let pass = results.iter().all(|r| r.is_ok());
    println!("lemma-check: {}", if pass { "PASS" } else { "FAIL" });
    ctx.json("lemma.json", &prov, &results, false)?;
    Ok(Outcome::from_pass(pass))
}

fn moments(ctx: &Context, a: &MomentsArgs) -> Result<Outcome> {
    let dist = resolve_dist(&a.dist, None)?;
    let rep = ctx.threads(|| Ok(moment_check(a.alpha, &dist, a.n, a.replicas, ctx.seed, a.z_limit)?))?;
    let prov = Provenance::new(ctx.seed, &json!({ "command": "moments", "args": a }));
    let mut csv = prov.comment_line();
    csv.push_str("n,empirical,oracle,std_error,z\n");
    for r in &rep.rows {
        csv.push_str(&format!("{},{},{},{},{}\n", r.n, r.empirical, r.oracle, r.std_error, r.z));
    }
    ctx.emit("moments.csv", &csv, true)?;
    ctx.json("moments.json", &prov, &rep, false)?;
    eprintln!(
        "max |empirical - oracle|/oracle = {:.3e}, max |z| = {:.2} (limit {}): {}",
        rep.max_rel_error,
        rep.max_abs_z,
        rep.z_limit,
        if rep.pass { "PASS" } else { "FAIL" }
    );
    Ok(Outcome::from_pass(rep.pass))
}

fn exit_times(ctx: &Context, a: &ExitArgs) -> Result<Outcome> {
    let dist = resolve_dist(&a.dist, None)?;
    let rep = ctx.threads(|| {
        let settings = ExitSettings {
            radii: a.radii.clone(),
            replicas: a.replicas,
            horizon: a.horizon,
            max_ratio: a.max_ratio,
            seed: ctx.seed,
        };
        Ok(exit_time_scaling(a.alpha, &dist, a.whiten, &settings)?)
    })?;
    let prov = Provenance::new(ctx.seed, &json!({ "command": "exit-times", "args": a }));
    let mut csv = prov.comment_line();
    csv.push_str("radius,mean,mean_over_r2,censored\n");
    for r in &rep.rows {
        csv.push_str(&format!("{},{},{},{}\n", r.radius, r.mean, r.mean_over_r2, r.censored));
    }
    ctx.emit("exit_times.csv", &csv, true)?;
    ctx.json("exit_times.json", &prov, &rep, false)?;
    eprintln!(
        "max/min of mean zeta_R/R^2 = {:.3} (limit {}): {}",
        rep.ratio,
        rep.max_ratio,
        if rep.pass { "PASS" } else { "FAIL" }
    );
    Ok(Outcome::from_pass(rep.pass))
}
