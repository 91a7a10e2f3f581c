//! End-to-end drivers shared by the command line and the test suites.

use std::time::Instant;

use crate::aalc::{CompressedState, ErrorBoundLadder, RatioThreshold, RunMetrics, Simulator};
use crate::circuit::CircuitProgram;
use crate::codec::{self, CompressedBlock, ErrorBound};
use crate::error::{Error, Result};
use crate::metrics::{format_f64, summarize, RunSummary};
use crate::reference::{fidelity, run_dense_from, DenseState, DEFAULT_DENSE_LIMIT};
use crate::state::{floor_log2, StateGeometry};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub ladder: ErrorBoundLadder,
    pub theta: RatioThreshold,
    /// `None` selects `min(n, 20)`.
    pub stride_bits: Option<usize>,
    pub workers: usize,
    /// Basis state the run starts from.
    pub init: usize,
    pub dense_limit: usize,
}

impl RunConfig {
    pub fn new(ladder: ErrorBoundLadder, theta: RatioThreshold) -> Self {
        Self {
            ladder,
            theta,
            stride_bits: None,
            workers: 1,
            init: 0,
            dense_limit: DEFAULT_DENSE_LIMIT,
        }
    }

    pub fn geometry(&self, n_qubits: usize) -> Result<StateGeometry> {
        match self.stride_bits {
            Some(s) => StateGeometry::new(n_qubits, s),
            None => StateGeometry::with_default_stride(n_qubits),
        }
    }

    pub fn simulator(&self) -> Result<Simulator> {
        Simulator::new(self.ladder.clone(), self.theta).with_workers(self.workers)
    }
}

/// Summary of a compressed run; the overall minimum includes the
/// initial state, so an empty program still has a defined ratio.
pub fn run_summary(
    metrics: &RunMetrics,
    fidelity: Option<f64>,
    reference_time: Option<f64>,
) -> RunSummary {
    let mut summary = match summarize(
        &metrics.records,
        metrics.threshold_violations,
        fidelity,
        reference_time,
    ) {
        Ok(s) => s,
        Err(_) => RunSummary {
            overall_min_ratio: metrics.initial_min_ratio,
            qubit_gain: 0,
            total_elapsed: 0.0,
            reference_elapsed: reference_time,
            overhead_factor: reference_time.map(|_| 0.0),
            fidelity,
            threshold_violations: 0,
        },
    };
    summary.overall_min_ratio = metrics.overall_min_ratio;
    summary.qubit_gain = floor_log2(metrics.overall_min_ratio);
    summary
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub state: CompressedState,
    pub metrics: RunMetrics,
    pub summary: RunSummary,
}

pub fn simulate(program: &CircuitProgram, cfg: &RunConfig) -> Result<SimulateOutcome> {
    let geometry = cfg.geometry(program.n_qubits)?;
    let (state, metrics) = cfg.simulator()?.run_program(program, geometry, cfg.init)?;
    let summary = run_summary(&metrics, None, None);
    Ok(SimulateOutcome {
        state,
        metrics,
        summary,
    })
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub state: CompressedState,
    pub reference: DenseState,
    pub metrics: RunMetrics,
    pub summary: RunSummary,
    pub fidelity: f64,
    /// Reference run wall time, seconds.
    pub reference_elapsed: f64,
    pub compressed_norm: f64,
    pub reference_norm: f64,
}

impl CompareOutcome {
    pub fn overhead_factor(&self) -> Option<f64> {
        self.summary.overhead_factor
    }
}

/// Runs the compressed pipeline and the dense reference on one program.
pub fn compare(program: &CircuitProgram, cfg: &RunConfig) -> Result<CompareOutcome> {
    if program.n_qubits > cfg.dense_limit {
        return Err(Error::DenseLimit {
            n_qubits: program.n_qubits,
            limit: cfg.dense_limit,
        });
    }
    let t0 = Instant::now();
    let reference = run_dense_from(program, cfg.init, cfg.dense_limit)?;
    let reference_elapsed = t0.elapsed().as_secs_f64();

    let geometry = cfg.geometry(program.n_qubits)?;
    let (state, metrics) = cfg.simulator()?.run_program(program, geometry, cfg.init)?;
    let amplitudes = state.to_amplitudes()?;
    let f = fidelity(&reference.amplitudes, &amplitudes)?;
    let summary = run_summary(&metrics, Some(f), Some(reference_elapsed.max(1e-9)));
    Ok(CompareOutcome {
        compressed_norm: amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt(),
        reference_norm: reference.norm_sqr().sqrt(),
        state,
        reference,
        metrics,
        summary,
        fidelity: f,
        reference_elapsed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub theta: f64,
    pub min_ratio: f64,
    pub fidelity: f64,
    /// Compressed run wall time, seconds.
    pub time: f64,
    pub threshold_violations: u64,
}

/// One [`compare`] per threshold.
pub fn bench(program: &CircuitProgram, cfg: &RunConfig, thetas: &[f64]) -> Result<Vec<BenchRow>> {
    if thetas.is_empty() {
        return Err(Error::Threshold(f64::NAN));
    }
    thetas
        .iter()
        .map(|&t| {
            let cfg = RunConfig {
                theta: RatioThreshold::new(t)?,
                ..cfg.clone()
            };
            let out = compare(program, &cfg)?;
            Ok(BenchRow {
                theta: t,
                min_ratio: out.summary.overall_min_ratio,
                fidelity: out.fidelity,
                time: out.summary.total_elapsed,
                threshold_violations: out.summary.threshold_violations,
            })
        })
        .collect()
}

pub fn bench_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "theta",
        "min_ratio",
        "fidelity",
        "time",
        "threshold_violations",
    ])?;
    for r in rows {
        w.write_record([
            format_f64(r.theta),
            format_f64(r.min_ratio),
            format_f64(r.fidelity),
            format_f64(r.time),
            r.threshold_violations.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone)]
pub struct CodecReport {
    pub block: CompressedBlock,
    pub decoded: Vec<f64>,
    pub ratio: f64,
    pub max_error: f64,
}

/// Round-trips a scalar array through the codec chosen by `delta`.
pub fn codec_round_trip(scalars: &[f64], delta: f64) -> Result<CodecReport> {
    let bound = ErrorBound::new(delta)?;
    let block = codec::compress(scalars, bound)?;
    let decoded = codec::decompress(&block)?;
    let max_error = scalars
        .iter()
        .zip(&decoded)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(CodecReport {
        ratio: block.ratio(),
        block,
        decoded,
        max_error,
    })
}

/// Decodes a raw little-endian f64 file image.
pub fn scalars_from_le_bytes(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::LengthMismatch(bytes.len(), bytes.len() / 8 * 8));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|w| f64::from_le_bytes(w.try_into().unwrap()))
        .collect())
}

pub fn scalars_to_le_bytes(scalars: &[f64]) -> Vec<u8> {
    scalars.iter().flat_map(|x| x.to_le_bytes()).collect()
}
