use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Smallest expected count per cell before neighbouring bins are merged.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl TwoSampleTest {
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Chi-square test of homogeneity for two one-dimensional samples.
///
/// Bin edges are pooled-sample quantiles; tied values always share a bin, so
/// discrete data is binned by value. Bins whose smallest expected count is
/// under 5 are merged into their right neighbour.
pub fn two_sample_chi2(a: &[f64], b: &[f64], bins: usize) -> Result<TwoSampleTest> {
    if a.is_empty() || b.is_empty() || bins < 2 {
        return Err(Error::InvalidParameter("need two nonempty samples and at least 2 bins".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = (1..bins)
        .map(|k| pooled[(k * pooled.len() / bins).min(pooled.len() - 1)])
        .collect();
    edges.dedup();
    // Bin k holds values in (edges[k-1], edges[k]]; the last bin is unbounded.
    let count = |xs: &[f64]| {
        let mut c = vec![0.0; edges.len() + 1];
        for &x in xs {
            c[edges.partition_point(|&e| e < x)] += 1.0;
        }
        c
    };
    let (ca, cb) = (count(a), count(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let total = na + nb;

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (x, y) in ca.into_iter().zip(cb) {
        acc.0 += x;
        acc.1 += y;
        let col = acc.0 + acc.1;
        if col * na.min(nb) / total >= MIN_EXPECTED {
            cells.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 + acc.1 > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => cells.push(acc),
        }
    }
    if cells.len() < 2 {
        return Ok(TwoSampleTest { statistic: 0.0, dof: 0, p_value: 1.0 });
    }
    let mut stat = 0.0;
    for &(x, y) in &cells {
        let col = x + y;
        let ea = col * na / total;
        let eb = col * nb / total;
        stat += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let dof = cells.len() - 1;
    let p_value = ChiSquared::new(dof as f64).expect("positive dof").sf(stat);
    Ok(TwoSampleTest { statistic: stat, dof, p_value })
}
