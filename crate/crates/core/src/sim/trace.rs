use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// One slot of a run. `q_d`, `z` and `y` are the queue values the controller
/// observed at the start of the slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub slot: u64,
    pub a_d: f64,
    pub q_d: f64,
    pub p_tx_d: f64,
    pub gamma: u8,
    pub model: Option<String>,
    pub f: f64,
    pub r_d: f64,
    pub p_b: Option<f64>,
    pub gamma_g: f64,
    pub z: f64,
    pub y: f64,
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<(), SimError> {
    write_csv_rows(trace, out)
}

/// Header row from the field names, then one line per row.
pub fn write_csv_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| SimError::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| SimError::Output(e.to_string()))
}
