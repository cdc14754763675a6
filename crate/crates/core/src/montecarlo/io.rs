//! Run-record tables, a compact binary log, and estimator reports.
//!
//! Binary log layout (little endian): magic `MXRR`, `u16` version, `u64` record count, then per
//! record `u64` orbit index, `u32` checkpoint count, `(u64 n, f64 M_n)` pairs, `u64` first and
//! last violation (`0` for none) and a `u8` EAH flag.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::driver::RunRecord;
use super::stats::EstimateWithCI;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MXRR";
const VERSION: u16 = 1;

fn opt(n: Option<u64>) -> String {
    n.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per `(orbit, checkpoint)`.
pub fn write_records_csv<W: Write>(w: W, records: &[RunRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "orbit_index",
        "n",
        "m_n",
        "first_violation_n",
        "last_violation_n",
        "eah_up_to_horizon",
    ])?;
    for r in records {
        for (n, m) in &r.m_at_checkpoints {
            out.write_record([
                r.orbit_index.to_string(),
                n.to_string(),
                m.to_string(),
                opt(r.first_violation_n),
                opt(r.last_violation_n),
                r.eah_up_to_horizon.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_records_bin<W: Write>(mut w: W, records: &[RunRecord]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in records {
        w.write_all(&r.orbit_index.to_le_bytes())?;
        w.write_all(&(r.m_at_checkpoints.len() as u32).to_le_bytes())?;
        for (n, m) in &r.m_at_checkpoints {
            w.write_all(&n.to_le_bytes())?;
            w.write_all(&m.to_bits().to_le_bytes())?;
        }
        w.write_all(&r.first_violation_n.unwrap_or(0).to_le_bytes())?;
        w.write_all(&r.last_violation_n.unwrap_or(0).to_le_bytes())?;
        w.write_all(&[r.eah_up_to_horizon as u8])?;
    }
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn nonzero(v: u64) -> Option<u64> {
    (v != 0).then_some(v)
}

pub fn read_records_bin<R: Read>(mut r: R) -> Result<Vec<RunRecord>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::invalid("not a run-record log"));
    }
    let mut v = [0u8; 2];
    r.read_exact(&mut v)?;
    if u16::from_le_bytes(v) != VERSION {
        return Err(Error::invalid(format!(
            "unsupported run-record log version {}",
            u16::from_le_bytes(v)
        )));
    }
    let count = read_u64(&mut r)?;
    let mut out = Vec::new();
    for _ in 0..count {
        let orbit_index = read_u64(&mut r)?;
        let mut k = [0u8; 4];
        r.read_exact(&mut k)?;
        let k = u32::from_le_bytes(k);
        let mut m_at_checkpoints = Vec::with_capacity(k as usize);
        for _ in 0..k {
            let n = read_u64(&mut r)?;
            let m = f64::from_bits(read_u64(&mut r)?);
            m_at_checkpoints.push((n, m));
        }
        let first_violation_n = nonzero(read_u64(&mut r)?);
        let last_violation_n = nonzero(read_u64(&mut r)?);
        let mut e = [0u8; 1];
        r.read_exact(&mut e)?;
        out.push(RunRecord {
            orbit_index,
            m_at_checkpoints,
            first_violation_n,
            last_violation_n,
            eah_up_to_horizon: e[0] != 0,
        });
    }
    Ok(out)
}

/// The JSON every estimator emits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

impl EstimatorReport {
    pub fn new(est: &EstimateWithCI, seed: u64, config_hash: impl Into<String>) -> Self {
        EstimatorReport {
            estimate: est.estimate,
            stderr: est.stderr,
            samples: est.samples,
            seed,
            config_hash: config_hash.into(),
            flag: est.flag.clone(),
        }
    }
}
