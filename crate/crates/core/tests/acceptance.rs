//! Acceptance run: one test per criterion, each printing a single
//! `criterion NN ... PASS|FAIL` line to stderr (written directly, so it shows
//! up even when the harness captures output).
//!
//! Replica counts and pilot-frozen constants come from presets/acceptance.toml.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::Deserialize;
use srrw_core::harness::{
    equivalence_suite, exit_time_scaling, moment_check, run_replicas, sweep_phase_diagram, CellResult, CellSpec,
    Diagnostic, EquivalenceSettings, ExitSettings,
};
use srrw_core::lemma::{certification_suite, Sampler, SearchGrid};
use srrw_core::model::StepDistribution;
use srrw_core::stats::{
    beta_gamma, delta_recursion_residual, median, mz_rate_trace, quantile_sorted, BetaGamma, Functional,
    FunctionalSpec,
};
use srrw_core::walk::{run_walk, Schedule, WalkConfig};

#[derive(Deserialize)]
struct Presets {
    seed: u64,
    returns: Replicas,
    superdiffusive: Superdiffusive,
    mz_rate: Replicas,
    lemma: Lemma,
    exit_times: ExitTimes,
    critical: Critical,
}

#[derive(Deserialize)]
struct Replicas {
    replicas: u64,
}

#[derive(Deserialize)]
struct Superdiffusive {
    floor: f64,
}

#[derive(Deserialize)]
struct Lemma {
    samples: usize,
    h_dims: Vec<usize>,
}

#[derive(Deserialize)]
struct ExitTimes {
    dist: String,
    horizon: u64,
}

#[derive(Deserialize)]
struct Critical {
    dist: String,
}

fn presets() -> Presets {
    toml::from_str(include_str!("../../../presets/acceptance.toml")).expect("presets/acceptance.toml")
}

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("\ncriterion {id:02} {name:<28} {verdict}  ({:.1} s) {detail}\n", elapsed.as_secs_f64());
    let _ = std::io::stderr().write_all(line.as_bytes());
}

/// Runs a criterion body, prints its line and fails the test on FAIL.
fn criterion(id: u32, name: &str, budget: Duration, body: impl FnOnce() -> (bool, String)) {
    let start = Instant::now();
    let (pass, detail) = body();
    let elapsed = start.elapsed();
    let in_budget = elapsed < budget;
    let detail = if in_budget { detail } else { format!("{detail}; over the {budget:?} budget") };
    report(id, name, pass && in_budget, elapsed, &detail);
    assert!(pass && in_budget, "criterion {id} ({name}) failed: {detail}");
}

fn run(cell: CellSpec, seed: u64) -> CellResult {
    CellResult { replicas: run_replicas(&cell, seed).expect("cell runs"), cell }
}

fn mins(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

#[test]
fn criterion_01_exact_moment_oracle() {
    let seed = presets().seed;
    criterion(1, "exact-moment oracle", mins(2), || {
        let mut pass = true;
        let mut parts = Vec::new();
        for alpha in [0.0, 0.25, 0.5, 0.75] {
            let rep = moment_check(alpha, &StepDistribution::rademacher(), 1000, 100_000, seed, 4.0).unwrap();
            pass &= rep.pass && rep.rows.last().map(|r| r.n) == Some(1000);
            parts.push(format!("a={alpha}: max|z|={:.2}", rep.max_abs_z));
        }
        (pass, parts.join(", "))
    });
}

#[test]
fn criterion_02_construction_equivalence() {
    let seed = presets().seed;
    criterion(2, "construction equivalence", mins(10), || {
        let settings = EquivalenceSettings { seed, ..EquivalenceSettings::default() };
        assert_eq!(settings.n_small, 6);
        assert_eq!(settings.samples, 100_000);
        let rep = equivalence_suite(&StepDistribution::rademacher(), &settings).unwrap();
        let worst = rep.exact.iter().map(|c| c.max_diff).fold(0.0, f64::max);
        let min_p = rep.sampled.iter().map(|s| s.test.p_value).fold(1.0, f64::min);
        (
            rep.pass,
            format!("max atom diff {worst:.1e} over {} cases; min p = {min_p:.4} at level 0.001", rep.exact.len()),
        )
    });
}

#[test]
fn criterion_03_phase_diagram() {
    let seed = presets().seed;
    criterion(3, "phase diagram d=3", mins(30), || {
        let g = StepDistribution::gaussian(3).unwrap();
        let alphas = [0.0, 0.25, 0.5, 0.625, 0.75, 0.875];
        let pd = sweep_phase_diagram(&alphas, &g, 1_000_000, 200, seed).unwrap();
        let pass = pd.points.iter().all(|p| p.replicas == 200 && (p.median - p.theory).abs() <= 0.05);
        let detail = pd
            .points
            .iter()
            .map(|p| format!("{}:{:.3}", p.alpha, p.median))
            .collect::<Vec<_>>()
            .join(" ");
        (pass, format!("median exponents {detail}"))
    });
}

#[test]
fn criterion_04_recurrence_split() {
    let p = presets();
    criterion(4, "recurrence/transience d=1", mins(15), || {
        let counts = |alpha: f64| {
            let cell = CellSpec::new(alpha, StepDistribution::rademacher(), 1_000_000, p.returns.replicas)
                .with_schedule(Schedule::Explicit(vec![10_000]))
                .with_diagnostics(vec![Diagnostic::Returns { radius: Some(1.0) }]);
            let res = run(cell, p.seed);
            assert_eq!(res.checkpoints(), [10_000, 1_000_000]);
            (res.series_at("returns", 0), res.series_at("returns", 1))
        };
        let (early, late) = counts(0.5);
        let grew = early.iter().zip(&late).filter(|(a, b)| b > a).count() as f64 / early.len() as f64;
        let recurrent = median(&late) > median(&early) && grew >= 0.9;
        let (early6, late6) = counts(0.6);
        let same = early6.iter().zip(&late6).filter(|(a, b)| a == b).count() as f64 / early6.len() as f64;
        let transient = median(&late6) == median(&early6) && same >= 0.9;
        (
            recurrent && transient,
            format!(
                "a=0.5: median {} -> {}, grew in {:.1}%; a=0.6: median {} -> {}, unchanged in {:.1}% (need 90%)",
                median(&early),
                median(&late),
                100.0 * grew,
                median(&early6),
                median(&late6),
                100.0 * same
            ),
        )
    });
}

#[test]
fn criterion_05_superdiffusive_limit() {
    let p = presets();
    criterion(5, "superdiffusive limit", mins(20), || {
        let g = StepDistribution::gaussian(2).unwrap();
        let cell = CellSpec::new(0.75, g, 1_000_000, 500).with_diagnostics(vec![Diagnostic::ScaledNorm]);
        let res = run(cell, p.seed);
        let mut last = res.scalar("scaled_norm");
        last.sort_by(f64::total_cmp);
        let q01 = quantile_sorted(&last, 0.01);
        let medians: Vec<f64> = (0..res.checkpoints().len()).map(|k| median(&res.series_at("cauchy", k))).collect();
        let shrinking = medians.windows(2).all(|w| w[1] < w[0]);
        (
            q01 > p.superdiffusive.floor && shrinking,
            format!(
                "q01 = {q01:.4} (floor {}), Cauchy medians {:.4} -> {:.4}, monotone: {shrinking}",
                p.superdiffusive.floor,
                medians[0],
                medians[medians.len() - 1]
            ),
        )
    });
}

#[test]
fn criterion_06_angular_transition() {
    let seed = presets().seed;
    criterion(6, "angular transition d=2", mins(15), || {
        let osc = |alpha: f64| {
            let g = StepDistribution::gaussian(2).unwrap();
            let cell = CellSpec::new(alpha, g, 1_000_000, 200).with_diagnostics(vec![Diagnostic::TailOscillation]);
            median(&run(cell, seed).scalar("tail_oscillation"))
        };
        let (high, low) = (osc(0.75), osc(0.4));
        (high < 0.05 && low > 0.5, format!("median oscillation a=0.75: {high:.4} (< 0.05), a=0.4: {low:.4} (> 0.5)"))
    });
}

#[test]
fn criterion_07_mz_rate() {
    let p = presets();
    criterion(7, "MZ-SLLN rate", mins(10), || {
        let dist = StepDistribution::symmetric_pareto(1.5, 1.0).unwrap();
        let cell = CellSpec::new(0.5, dist, 1_000_000, p.mz_rate.replicas)
            .with_schedule(Schedule::Geometric { start: 1000, ratio: 2.0 })
            .with_diagnostics(vec![Diagnostic::Delta(Functional::Coordinate(0))]);
        let res = run(cell, p.seed);
        let ns = res.checkpoints().to_vec();
        let traces: Vec<Vec<f64>> = res
            .replicas
            .iter()
            .map(|r| mz_rate_trace(&ns, &r.series["delta_coord0"], 0.2, 1.4, 0.5).unwrap().values)
            .collect();
        let medians: Vec<f64> =
            (0..ns.len()).map(|k| median(&traces.iter().map(|t| t[k]).collect::<Vec<_>>())).collect();
        let monotone = medians.windows(2).all(|w| w[1] < w[0]);
        let drop = medians[0] / medians[medians.len() - 1];
        (
            ns[0] == 1000 && monotone && drop >= 2.0,
            format!("median n^0.2|delta_n| {:.4} -> {:.4}, drop {drop:.2}x, monotone: {monotone}", medians[0], medians[medians.len() - 1]),
        )
    });
}

#[test]
fn criterion_08_beta_asymptotics() {
    criterion(8, "beta_n asymptotics", Duration::from_secs(1), || {
        let mut pass = true;
        let mut parts = Vec::new();
        for alpha in [0.1, 0.5, 0.9] {
            let bg = beta_gamma(1_000_000, alpha).unwrap();
            let err = (bg.scaled[999_999] - BetaGamma::limit_constant(alpha)).abs();
            pass &= err < 1e-3;
            parts.push(format!("a={alpha}: {err:.2e}"));
        }
        (pass, parts.join(", "))
    });
}

#[test]
fn criterion_09_pathwise_identity() {
    let seed = presets().seed;
    criterion(9, "pathwise identity", mins(5), || {
        let laws = [
            StepDistribution::rademacher(),
            StepDistribution::gaussian(2).unwrap(),
            StepDistribution::symmetric_pareto(1.5, 1.0).unwrap(),
            StepDistribution::triangular_lattice(),
        ];
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for (i, law) in laws.iter().enumerate() {
            let d = law.dim();
            let mut functionals = vec![Functional::Coordinate(0), Functional::NormPower(1.0), Functional::TailIndicator(1.5)];
            if law.second_moment().is_some() {
                functionals.push(Functional::NormSquared);
            }
            if d > 1 {
                functionals.push(Functional::CrossMoment(0, 1));
            }
            for (j, alpha) in [0.0, 0.3, 0.5, 0.7, 0.95].into_iter().enumerate() {
                let cfg = WalkConfig::new(alpha, law.clone(), 20_000, seed + (10 * i + j) as u64)
                    .unwrap()
                    .retaining_trajectory();
                let steps = run_walk(&cfg, &mut []).unwrap().trajectory.unwrap();
                for &f in &functionals {
                    let spec = FunctionalSpec::new(f, law);
                    let r = delta_recursion_residual(&spec, &steps, d, alpha).unwrap();
                    worst = worst.max(r.recursion).max(r.closed_form);
                    count += 1;
                }
            }
        }
        (worst < 1e-8, format!("worst relative residual {worst:.2e} over {count} trajectory/functional pairs"))
    });
}

#[test]
fn criterion_10_lyapunov_certification() {
    let p = presets();
    criterion(10, "Lyapunov certification", mins(5), || {
        let sampler = Sampler::new(p.lemma.samples, p.seed);
        let rep = certification_suite(&p.lemma.h_dims, &SearchGrid::default(), &sampler).unwrap();
        let mut parts = vec![format!("proof constants {}", if rep.proof_constants.pass { "ok" } else { "violated" })];
        for s in &rep.searches {
            parts.push(match s {
                Ok(r) => format!("{} r={:?} C={:?} ({} violations)", r.inequality, r.constants.r, r.constants.c, r.violations),
                Err(e) => format!("{} exhausted", e.inequality),
            });
        }
        let zero = rep.proof_constants.violations == 0
            && rep.searches.iter().all(|s| s.as_ref().is_ok_and(|r| r.violations == 0 && r.samples == p.lemma.samples));
        (rep.pass && zero, parts.join("; "))
    });
}

#[test]
fn criterion_11_exit_time_scaling() {
    let p = presets();
    criterion(11, "exit-time scaling", mins(10), || {
        let dist: StepDistribution = p.exit_times.dist.parse().unwrap();
        assert_eq!(dist.dim(), 2);
        let settings = ExitSettings {
            radii: vec![10.0, 20.0, 40.0, 80.0],
            replicas: 1000,
            horizon: p.exit_times.horizon,
            max_ratio: 3.0,
            seed: p.seed,
        };
        let rep = exit_time_scaling(0.5, &dist, true, &settings).unwrap();
        let scaled: Vec<String> = rep.rows.iter().map(|r| format!("{:.3}", r.mean_over_r2)).collect();
        (rep.pass, format!("mean zeta_R/R^2 = [{}], max/min {:.3} (< 3)", scaled.join(", "), rep.ratio))
    });
}

#[test]
fn criterion_12_critical_2d_rate() {
    let p = presets();
    criterion(12, "critical 2d rate", mins(20), || {
        let dist: StepDistribution = p.critical.dist.parse().unwrap();
        assert_eq!(dist.dim(), 2);
        let cell = CellSpec::new(0.5, dist, 1_000_000, 200)
            .whitened()
            .with_diagnostics(vec![Diagnostic::Xn { kappa: 0.9 }]);
        let xs = run(cell, p.seed).scalar("xn");
        let dev: Vec<f64> = xs.iter().map(|x| (x - 1.0).abs()).collect();
        let m = median(&dev);
        (m < 0.1, format!("median |x_n - 1| = {m:.4} at n = 1e6 (need < 0.1)"))
    });
}
