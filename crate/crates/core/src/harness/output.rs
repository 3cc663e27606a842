use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CellResult;
use crate::error::{Error, Result};
use crate::rng::RNG_IDENTITY;

/// Metadata embedded in every output file. CSV files carry it as a first line
/// `# provenance: {json}`; JSON files as a `provenance` field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    /// SHA-256 of the JSON serialisation of the plan or arguments.
    pub config_hash: String,
    pub rng: String,
}

impl Provenance {
    pub fn new(seed: u64, config: &impl Serialize) -> Self {
        let json = serde_json::to_vec(config).expect("config serialises");
        let hash = Sha256::digest(&json);
        Self {
            tool: "srrw".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config_hash: hash.iter().map(|b| format!("{b:02x}")).collect(),
            rng: RNG_IDENTITY.into(),
        }
    }

    pub fn comment_line(&self) -> String {
        format!("# provenance: {}\n", serde_json::to_string(self).expect("provenance serialises"))
    }
}

pub(crate) fn csv_writer(provenance: &Provenance) -> csv::Writer<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(provenance.comment_line().as_bytes());
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf)
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

pub(crate) fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Format(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Per-replica values in long format: `alpha,d,dist,n,replica,metric,value`.
/// Series give one row per checkpoint; final scalars that are not also series
/// get one row at the horizon.
pub fn long_csv(results: &[CellResult], provenance: &Provenance) -> Result<String> {
    let mut w = csv_writer(provenance);
    w.write_record(["alpha", "d", "dist", "n", "replica", "metric", "value"])
        .map_err(csv_error)?;
    for res in results {
        let c = &res.cell;
        let (alpha, d, dist) = (c.alpha.to_string(), c.d().to_string(), c.dist.to_string());
        for rep in &res.replicas {
            let replica = rep.replica.to_string();
            for (k, n) in rep.checkpoints.iter().enumerate() {
                for (metric, values) in &rep.series {
                    w.write_record([&alpha, &d, &dist, &n.to_string(), &replica, metric, &values[k].to_string()])
                        .map_err(csv_error)?;
                }
            }
            for (metric, value) in rep.summary.iter().filter(|(m, _)| !rep.series.contains_key(*m)) {
                w.write_record([&alpha, &d, &dist, &c.n.to_string(), &replica, metric, &value.to_string()])
                    .map_err(csv_error)?;
            }
        }
    }
    finish(w)
}
