use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AxisLabel, AxisSpec, GridError, GridSpec, Marginal};

const MAGIC: &[u8; 8] = b"HLMARG01";

/// Writes a marginal as `HLMARG01`, a `u32` axis count, then per axis a
/// `u8` label length, the label, `u32 N` and `f64 L`, followed by the
/// row-major values. All numbers are little-endian.
pub fn write_snapshot(out: &mut impl Write, marginal: &Marginal) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(marginal.axes.len() as u32).to_le_bytes())?;
    for axis in &marginal.axes {
        let label = axis.label.name().as_bytes();
        out.write_all(&[label.len() as u8])?;
        out.write_all(label)?;
        out.write_all(&(axis.points as u32).to_le_bytes())?;
        out.write_all(&axis.half_extent.to_le_bytes())?;
    }
    for v in &marginal.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a marginal written by [`write_snapshot`].
pub fn read_snapshot(input: &mut impl Read) -> Result<Marginal, GridError> {
    let bad = |what: &str| GridError::Snapshot(what.to_string());
    let mut read = |n: usize| -> Result<Vec<u8>, GridError> {
        let mut buffer = vec![0; n];
        input.read_exact(&mut buffer).map_err(|e| GridError::Snapshot(e.to_string()))?;
        Ok(buffer)
    };
    if read(8)? != MAGIC {
        return Err(bad("missing HLMARG01 header"));
    }
    let count = u32::from_le_bytes(read(4)?.try_into().unwrap()) as usize;
    if count == 0 || count > 3 {
        return Err(bad("axis count must be between 1 and 3"));
    }
    let mut axes = Vec::with_capacity(count);
    for _ in 0..count {
        let len = read(1)?[0] as usize;
        let name = String::from_utf8(read(len)?).map_err(|_| bad("axis label is not UTF-8"))?;
        let label = AxisLabel::from_name(&name).ok_or_else(|| bad(&format!("unknown axis label {name:?}")))?;
        let points = u32::from_le_bytes(read(4)?.try_into().unwrap()) as usize;
        let half_extent = f64::from_le_bytes(read(8)?.try_into().unwrap());
        axes.push(AxisSpec::new(label, half_extent, points));
    }
    GridSpec::new(axes.clone()).map_err(|e| bad(&e.to_string()))?;
    let len: usize = axes.iter().map(|a| a.points).product();
    let values = read(8 * len)?.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    Ok(Marginal { axes, values })
}

/// JSON record of a grid run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub grid: GridSpec,
    pub dt: f64,
    pub k: f64,
    pub t_final: f64,
    pub steps: usize,
    pub threads: usize,
    pub koopmanian: String,
    /// Wall-clock seconds per phase of the run.
    pub durations: BTreeMap<String, f64>,
    pub norm_drift: f64,
}
