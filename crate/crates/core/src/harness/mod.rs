//! Replicated experiments with deterministic seeding.
//!
//! Replica `i` of a cell walks with the stream seeded by
//! `split_seed(master, cell_id(cell.key()), i)` (see [`crate::rng`]). The cell
//! key covers α, d, the step law, n and whitening but not the replica count or
//! the diagnostics, so replica `i` is the same walk whatever else is requested.
//! Replicas run on a rayon pool and are collected in replica order, so every
//! aggregate is bit-identical at any thread count.

mod config;
mod diagnostic;
mod equivalence;
mod exits;
mod moments;
mod output;
mod sweep;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{load_plan, parse_plan};
pub use diagnostic::{Diagnostic, DEFAULT_KAPPA};
pub use equivalence::{
    equivalence_suite, sample_both, EquivalenceReport, EquivalenceSettings, ExactComparison, SampleComparison,
    EXACT_TOLERANCE,
};
pub use exits::{exit_time_scaling, ExitRow, ExitScaling, ExitSettings};
pub use moments::{moment_check, moment_oracle, MomentReport, MomentRow};
pub use output::{long_csv, Provenance};
pub use sweep::{sweep_phase_diagram, PhaseDiagram, PhasePoint};

use crate::error::{Error, Result};
use crate::model::{whiten, StepDistribution};
use crate::rng::{cell_id, split_seed};
use crate::stats::{DiagnosticsReport, Summary};
use crate::walk::{run_walk, Observer, Schedule, WalkConfig, WalkMode};

/// Per-replica output: checkpoint series and final scalars.
pub type ReplicaSummary = DiagnosticsReport;

/// One experiment cell: a parameter point and what to measure there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub alpha: f64,
    pub dist: StepDistribution,
    /// Replace μ by its whitened image before walking.
    #[serde(default)]
    pub whiten: bool,
    pub n: u64,
    pub replicas: u64,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub mode: WalkMode,
    #[serde(default = "default_diagnostics")]
    pub diagnostics: Vec<Diagnostic>,
}

fn default_diagnostics() -> Vec<Diagnostic> {
    vec![Diagnostic::Norm]
}

impl CellSpec {
    pub fn new(alpha: f64, dist: StepDistribution, n: u64, replicas: u64) -> Self {
        Self {
            alpha,
            dist,
            whiten: false,
            n,
            replicas,
            schedule: Schedule::default(),
            mode: WalkMode::Auto,
            diagnostics: default_diagnostics(),
        }
    }

    pub fn whitened(mut self) -> Self {
        self.whiten = true;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_mode(mut self, mode: WalkMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_diagnostics(mut self, diagnostics: Vec<Diagnostic>) -> Self {
        self.diagnostics = diagnostics;
        self
    }

    pub fn d(&self) -> usize {
        self.dist.dim()
    }

    /// Seeding key; independent of the replica count and diagnostics.
    pub fn key(&self) -> String {
        format!(
            "alpha={},d={},dist={},n={},whiten={}",
            self.alpha,
            self.d(),
            self.dist,
            self.n,
            self.whiten
        )
    }

    /// The law the walk actually uses.
    pub fn step_law(&self) -> Result<StepDistribution> {
        if self.whiten {
            Ok(whiten(&self.dist)?.1)
        } else {
            Ok(self.dist.clone())
        }
    }

    fn walk_config(&self, law: StepDistribution, seed: u64) -> Result<WalkConfig> {
        Ok(WalkConfig::new(self.alpha, law, self.n, seed)?
            .with_schedule(self.schedule.clone())
            .with_mode(self.mode))
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::InvalidParameter("replica count must be at least 1".into()));
        }
        let law = self.step_law()?;
        self.walk_config(law.clone(), 0)?.validate()?;
        for diag in &self.diagnostics {
            diag.validate(self.alpha, &law)?;
        }
        Ok(())
    }
}

/// Runs one replica of a cell with an explicit seed.
pub fn run_replica(cell: &CellSpec, law: &StepDistribution, seed: u64, replica: u64) -> Result<ReplicaSummary> {
    let config = cell.walk_config(law.clone(), seed)?;
    let mut observers: Vec<Box<dyn Observer + '_>> =
        cell.diagnostics.iter().filter_map(|d| d.observer(cell.n, law)).collect();
    let series = run_walk(&config, &mut observers)?;
    if series.overflow {
        return Err(Error::InvalidParameter("‖S_n‖ overflowed the floating range".into()));
    }
    let mut report = DiagnosticsReport::new(replica, series.times());
    for diag in &cell.diagnostics {
        diag.record(&series, cell.alpha, law, &mut report)?;
    }
    Ok(report)
}

/// All replicas of a cell, in replica order. A failing replica aborts the cell.
pub fn run_replicas(cell: &CellSpec, master_seed: u64) -> Result<Vec<ReplicaSummary>> {
    cell.validate()?;
    let law = cell.step_law()?;
    let id = cell_id(&cell.key());
    (0..cell.replicas)
        .into_par_iter()
        .map(|i| {
            run_replica(cell, &law, split_seed(master_seed, id, i), i)
                .map_err(|e| Error::Replica { replica: i, message: e.to_string() })
        })
        .collect()
}

/// Runs `f` on a pool of `threads` workers, or on the global pool for `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// A cell with its replica results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: CellSpec,
    pub replicas: Vec<ReplicaSummary>,
}

impl CellResult {
    /// Final-time scalar `metric` of every replica, in replica order.
    pub fn scalar(&self, metric: &str) -> Vec<f64> {
        self.replicas.iter().filter_map(|r| r.summary.get(metric).copied()).collect()
    }

    /// Series `metric` at checkpoint index `k` of every replica.
    pub fn series_at(&self, metric: &str, k: usize) -> Vec<f64> {
        self.replicas
            .iter()
            .filter_map(|r| r.series.get(metric).and_then(|s| s.get(k)).copied())
            .collect()
    }

    pub fn checkpoints(&self) -> &[u64] {
        self.replicas.first().map(|r| r.checkpoints.as_slice()).unwrap_or(&[])
    }

    /// One row per scalar metric, at n.
    pub fn rows(&self) -> Vec<SweepRow> {
        let mut names: Vec<&String> = self.replicas.iter().flat_map(|r| r.summary.keys()).collect();
        names.sort();
        names.dedup();
        names
            .into_iter()
            .filter_map(|m| {
                Summary::from_values(&self.scalar(m)).map(|summary| SweepRow {
                    alpha: self.cell.alpha,
                    d: self.cell.d(),
                    dist: self.cell.dist.to_string(),
                    n: self.cell.n,
                    metric: m.clone(),
                    summary,
                })
            })
            .collect()
    }
}

/// A list of cells sharing a master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub seed: u64,
    // Neither field changes results, so both stay out of the serialised form
    // and hence out of the provenance config hash.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    pub cells: Vec<CellSpec>,
}

impl ExperimentPlan {
    pub fn run(&self) -> Result<Vec<CellResult>> {
        for c in &self.cells {
            c.validate()?;
        }
        with_threads(self.threads, || {
            self.cells
                .iter()
                .map(|c| Ok(CellResult { cell: c.clone(), replicas: run_replicas(c, self.seed)? }))
                .collect()
        })?
    }
}

/// Replica aggregate of one metric in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub d: usize,
    pub dist: String,
    pub n: u64,
    pub metric: String,
    pub summary: Summary,
}

/// Aggregates keyed by (α, d, dist, n, metric). The CI half-width is the
/// normal approximation 1.96·std/√R.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn from_results(results: &[CellResult]) -> Self {
        Self { rows: results.iter().flat_map(|r| r.rows()).collect() }
    }

    pub fn find(&self, alpha: f64, metric: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.alpha == alpha && r.metric == metric)
    }

    /// Wide CSV, one line per row, after a `# provenance` comment line.
    pub fn to_csv(&self, provenance: &Provenance) -> Result<String> {
        let mut w = output::csv_writer(provenance);
        w.write_record([
            "alpha", "d", "dist", "n", "metric", "mean", "std", "median", "q05", "q95", "ci_half_width",
            "replicas",
        ])
        .map_err(output::csv_error)?;
        for r in &self.rows {
            let s = &r.summary;
            w.write_record([
                r.alpha.to_string(),
                r.d.to_string(),
                r.dist.clone(),
                r.n.to_string(),
                r.metric.clone(),
                s.mean.to_string(),
                s.std.to_string(),
                s.median.to_string(),
                s.q05.to_string(),
                s.q95.to_string(),
                s.ci_half_width.to_string(),
                s.count.to_string(),
            ])
            .map_err(output::csv_error)?;
        }
        output::finish(w)
    }

    pub fn to_json(&self, provenance: &Provenance) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "provenance": provenance,
            "rows": self.rows,
        }))?)
    }
}
