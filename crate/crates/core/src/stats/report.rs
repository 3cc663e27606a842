use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-checkpoint series and summary scalars for one walk.
///
/// JSON layout:
///
/// ```json
/// {
///   "replica": 0,
///   "checkpoints": [64, 128, ...],
///   "series": { "norm": [..], "delta_coord0": [..] },
///   "summary": { "escape_exponent": 0.51, "returns": 12 },
///   "warnings": []
/// }
/// ```
///
/// Every series has one entry per checkpoint. NaN is rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub replica: u64,
    pub checkpoints: Vec<u64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub summary: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl DiagnosticsReport {
    pub fn new(replica: u64, checkpoints: Vec<u64>) -> Self {
        Self { replica, checkpoints, ..Self::default() }
    }

    pub fn add_series(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.checkpoints.len() {
            return Err(Error::InvalidParameter(format!(
                "series {name} has {} values for {} checkpoints",
                values.len(),
                self.checkpoints.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NotANumber(name));
        }
        self.series.insert(name, values);
        Ok(())
    }

    pub fn add_summary(&mut self, name: impl Into<String>, value: f64) -> Result<()> {
        let name = name.into();
        if value.is_nan() {
            return Err(Error::NotANumber(name));
        }
        self.summary.insert(name, value);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, values) in &self.series {
            if values.len() != self.checkpoints.len() {
                return Err(Error::InvalidParameter(format!("series {name} has the wrong length")));
            }
            if values.iter().any(|v| v.is_nan()) {
                return Err(Error::NotANumber(name.clone()));
            }
        }
        if let Some((name, _)) = self.summary.iter().find(|(_, v)| v.is_nan()) {
            return Err(Error::NotANumber(name.clone()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per checkpoint: `replica,n,<series...>`.
    pub fn to_csv(&self) -> Result<String> {
        self.validate()?;
        let mut out = String::from("replica,n");
        for name in self.series.keys() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (k, n) in self.checkpoints.iter().enumerate() {
            write!(out, "{},{n}", self.replica).expect("string write");
            for values in self.series.values() {
                write!(out, ",{}", values[k]).expect("string write");
            }
            out.push('\n');
        }
        Ok(out)
    }
}
