use serde::{Deserialize, Serialize};

use super::output::{csv_error, csv_writer, finish};
use super::{run_replicas, CellResult, CellSpec, Diagnostic, Provenance, SweepTable};
use crate::error::{Error, Result};
use crate::model::StepDistribution;

/// One α of the escape-exponent curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub alpha: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
    /// max{α, 1/2}.
    pub theory: f64,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub d: usize,
    pub dist: String,
    pub n: u64,
    pub points: Vec<PhasePoint>,
    /// Aggregates of `escape_exponent` only, one row per α.
    pub table: SweepTable,
    pub cells: Vec<CellResult>,
}

impl PhaseDiagram {
    /// File name of the matching figure panel: `fig1a.csv` for d ≤ 2, else `fig1b.csv`.
    pub fn figure_name(&self) -> &'static str {
        if self.d <= 2 {
            "fig1a.csv"
        } else {
            "fig1b.csv"
        }
    }

    /// `alpha,exponent_median,exponent_q05,exponent_q95,theory,regime`. The
    /// regime for d ≤ 2 is recurrent below α = 1/2 and transient from 1/2 on
    /// (recurrent at exactly 1/2 in d = 1); for d ≥ 3 it is always transient.
    pub fn plot_csv(&self, provenance: &Provenance) -> Result<String> {
        let mut w = csv_writer(provenance);
        w.write_record(["alpha", "exponent_median", "exponent_q05", "exponent_q95", "theory", "regime"])
            .map_err(csv_error)?;
        for p in &self.points {
            let recurrent = match self.d {
                1 => p.alpha <= 0.5,
                2 => p.alpha < 0.5,
                _ => false,
            };
            let regime = if recurrent { "recurrent" } else { "transient" };
            w.write_record([
                p.alpha.to_string(),
                p.median.to_string(),
                p.q05.to_string(),
                p.q95.to_string(),
                p.theory.to_string(),
                regime.to_string(),
            ])
            .map_err(csv_error)?;
        }
        finish(w)
    }
}

/// Replica-median escape exponent (slope of log‖S_n‖ on log n over the last
/// decade) at each α, for the whitened step law.
pub fn sweep_phase_diagram(
    alphas: &[f64],
    dist: &StepDistribution,
    n: u64,
    replicas: u64,
    seed: u64,
) -> Result<PhaseDiagram> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("empty alpha grid".into()));
    }
    let mut cells = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let cell = CellSpec::new(alpha, dist.clone(), n, replicas)
            .whitened()
            .with_diagnostics(vec![Diagnostic::EscapeExponent]);
        cells.push(CellResult { replicas: run_replicas(&cell, seed)?, cell });
    }
    let table = SweepTable {
        rows: cells
            .iter()
            .flat_map(|c| c.rows())
            .filter(|r| r.metric == "escape_exponent")
            .collect(),
    };
    let points = table
        .rows
        .iter()
        .map(|r| PhasePoint {
            alpha: r.alpha,
            median: r.summary.median,
            q05: r.summary.q05,
            q95: r.summary.q95,
            theory: r.alpha.max(0.5),
            replicas: r.summary.count,
        })
        .collect();
    Ok(PhaseDiagram { d: dist.dim(), dist: dist.to_string(), n, points, table, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_layout() {
        let g = StepDistribution::gaussian(3).unwrap();
        let pd = sweep_phase_diagram(&[0.0, 0.9], &g, 20_000, 20, 5).unwrap();
        assert_eq!(pd.table.rows.len(), 2);
        assert_eq!(pd.figure_name(), "fig1b.csv");
        assert!((pd.points[0].median - 0.5).abs() < 0.1, "{:?}", pd.points[0]);
        assert!(pd.points[1].median > 0.75, "{:?}", pd.points[1]);
        let p = Provenance::new(5, &"sweep");
        let csv = pd.plot_csv(&p).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(2).unwrap().ends_with(",0.5,transient"));
    }
}
