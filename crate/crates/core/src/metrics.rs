//! Per-gate compression records, run summaries and their serialization.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::floor_log2;

pub const CSV_COLUMNS: [&str; 10] = [
    "gate_index",
    "gate_label",
    "stride_count",
    "min_ratio",
    "mean_ratio",
    "max_chosen_delta",
    "bytes_before",
    "bytes_after",
    "elapsed_ns",
    "norm_after",
];

/// State of the compressed vector right after one gate.
///
/// `min_ratio` and `mean_ratio` are taken over every stride of the state,
/// including strides the gate did not touch. `stride_count` is the number
/// of strides the gate recompressed. `bytes_before` is the uncompressed
/// size of the state and `bytes_after` its compressed size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub gate_index: usize,
    pub gate_label: String,
    pub stride_count: usize,
    pub min_ratio: f64,
    pub mean_ratio: f64,
    pub max_chosen_delta: f64,
    pub bytes_before: u64,
    pub bytes_after: u64,
    pub elapsed_ns: u64,
    pub norm_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub overall_min_ratio: f64,
    pub qubit_gain: i32,
    /// Seconds.
    pub total_elapsed: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_elapsed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overhead_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    pub threshold_violations: u64,
}

/// Folds gate records into a run summary. Elapsed time is the sum of the
/// per-gate times; `reference_time` is in seconds.
pub fn summarize(
    records: &[GateRecord],
    threshold_violations: u64,
    fidelity: Option<f64>,
    reference_time: Option<f64>,
) -> Result<RunSummary> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let overall_min_ratio = records
        .iter()
        .map(|r| r.min_ratio)
        .fold(f64::INFINITY, f64::min);
    let total_elapsed = records.iter().map(|r| r.elapsed_ns).sum::<u64>() as f64 * 1e-9;
    Ok(RunSummary {
        overall_min_ratio,
        qubit_gain: floor_log2(overall_min_ratio),
        total_elapsed,
        reference_elapsed: reference_time,
        overhead_factor: reference_time.map(|t| total_elapsed / t),
        fidelity,
        threshold_violations,
    })
}

/// 17 significant digits; parses back to the same double.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(records: &[GateRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record([
            r.gate_index.to_string(),
            r.gate_label.clone(),
            r.stride_count.to_string(),
            format_f64(r.min_ratio),
            format_f64(r.mean_ratio),
            format_f64(r.max_chosen_delta),
            r.bytes_before.to_string(),
            r.bytes_after.to_string(),
            r.elapsed_ns.to_string(),
            format_f64(r.norm_after),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[GateRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_csv(text: &str) -> Result<Vec<GateRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| Ok(row?)).collect()
}

pub fn emit_summary_json(summary: &RunSummary) -> Result<String> {
    Ok(serde_json::to_string_pretty(summary)?)
}
