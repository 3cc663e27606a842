//! Binary trajectory files.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field       | type            |
//! |-------------|-----------------|
//! | magic       | 8 bytes `SRRWTRJ\0` |
//! | version     | u32 (= 1)       |
//! | d           | u32             |
//! | alpha       | f64             |
//! | seed        | u64             |
//! | n           | u64             |
//! | desc length | u32             |
//! | descriptor  | UTF-8 bytes     |
//! | steps       | d columns of n f64 each: X_1[0]..X_n[0], X_1[1]..X_n[1], … |

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const TRAJECTORY_MAGIC: &[u8; 8] = b"SRRWTRJ\0";
pub const TRAJECTORY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryHeader {
    pub d: usize,
    pub alpha: f64,
    pub seed: u64,
    pub n: u64,
    pub descriptor: String,
}

/// Writes row-major `steps` (n rows of d values) in columnar order.
pub fn write_trajectory<W: Write>(mut w: W, header: &TrajectoryHeader, steps: &[f64]) -> Result<()> {
    let d = header.d;
    if d == 0 || steps.len() as u64 != header.n * d as u64 {
        return Err(Error::Format(format!(
            "{} values do not form {} steps of dimension {d}",
            steps.len(),
            header.n
        )));
    }
    w.write_all(TRAJECTORY_MAGIC)?;
    w.write_all(&TRAJECTORY_VERSION.to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())?;
    w.write_all(&header.alpha.to_le_bytes())?;
    w.write_all(&header.seed.to_le_bytes())?;
    w.write_all(&header.n.to_le_bytes())?;
    let desc = header.descriptor.as_bytes();
    w.write_all(&(desc.len() as u32).to_le_bytes())?;
    w.write_all(desc)?;
    let mut buf = Vec::with_capacity(steps.len() * 8);
    for j in 0..d {
        for x in steps.iter().skip(j).step_by(d) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated trajectory header: {e}")))?;
    Ok(b)
}

/// Reads a file written by [`write_trajectory`], returning steps in row-major order.
pub fn read_trajectory<R: Read>(mut r: R) -> Result<(TrajectoryHeader, Vec<f64>)> {
    let magic: [u8; 8] = take(&mut r)?;
    if &magic != TRAJECTORY_MAGIC {
        return Err(Error::Format("not a trajectory file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != TRAJECTORY_VERSION {
        return Err(Error::Format(format!("unsupported trajectory version {version}")));
    }
    let d = u32::from_le_bytes(take(&mut r)?) as usize;
    let alpha = f64::from_le_bytes(take(&mut r)?);
    let seed = u64::from_le_bytes(take(&mut r)?);
    let n = u64::from_le_bytes(take(&mut r)?);
    let len = u32::from_le_bytes(take(&mut r)?) as usize;
    let mut desc = vec![0u8; len];
    r.read_exact(&mut desc)
        .map_err(|e| Error::Format(format!("truncated descriptor: {e}")))?;
    let descriptor = String::from_utf8(desc).map_err(|e| Error::Format(e.to_string()))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let expected = n as usize * d * 8;
    if d == 0 || body.len() != expected {
        return Err(Error::Format(format!(
            "body has {} bytes, expected {expected}",
            body.len()
        )));
    }
    let n = n as usize;
    let mut steps = vec![0.0; n * d];
    for (k, chunk) in body.chunks_exact(8).enumerate() {
        let (j, i) = (k / n, k % n);
        steps[i * d + j] = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
    }
    Ok((TrajectoryHeader { d, alpha, seed, n: n as u64, descriptor }, steps))
}
