//! Compressed state store and the amplitude-aware adaptive compression loop.
//!
//! The state lives as one pair of compressed blocks (real plane, imaginary
//! plane) per stride. Every gate runs the same cycle on each stride it
//! touches: decompress, normalize, apply the gate, then recompress while
//! walking the error-bound ladder from its tightest level until the stride's
//! compression ratio reaches the threshold.
//!
//! Normalization is global and lazy. Each stride carries a scale factor for
//! its stored values and the state carries `pending_scale = 1/√Σ|α|²`
//! from the previous gate. A stride is brought to unit-norm units when it is
//! next decompressed; strides a gate skips keep their blocks and fold the
//! pending factor into their own scale.

use std::time::Instant;

use rayon::prelude::*;

use crate::circuit::CircuitProgram;
use crate::codec::{BuiltinCodec, Codec, CompressedBlock, ErrorBound};
use crate::error::{Error, Result};
use crate::gate::{
    apply_controlled_cross_stride, apply_controlled_in_stride, apply_diag_phase_flip,
    apply_single_cross_stride, apply_single_in_stride, is_local, partner_stride, stride_fires,
    GateOp,
};
use crate::metrics::GateRecord;
use crate::state::{Amplitude, NormAccumulator, StateGeometry, StrideBuffer, AMPLITUDE_BYTES};

/// Error bounds tried in order, tightest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBoundLadder {
    bounds: Vec<ErrorBound>,
}

impl ErrorBoundLadder {
    /// Bounds must be non-empty, non-negative and strictly increasing. A
    /// ladder normally opens with 0 (lossless); a single positive bound
    /// gives fixed-bound lossy compression.
    pub fn new(deltas: &[f64]) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::Ladder("empty".into()));
        }
        let bounds = deltas
            .iter()
            .map(|&d| ErrorBound::new(d).map_err(|_| Error::Ladder(format!("bad bound {d}"))))
            .collect::<Result<Vec<_>>>()?;
        if bounds.windows(2).any(|w| w[1].delta() <= w[0].delta()) {
            return Err(Error::Ladder("bounds must be strictly increasing".into()));
        }
        Ok(Self { bounds })
    }

    pub fn lossless() -> Self {
        Self {
            bounds: vec![ErrorBound::LOSSLESS],
        }
    }

    /// Fixed-bound lossy compression with no escalation.
    pub fn fixed(delta: f64) -> Result<Self> {
        if delta.is_nan() || delta <= 0.0 {
            return Err(Error::Ladder(format!(
                "fixed bound must be positive, got {delta}"
            )));
        }
        Self::new(&[delta])
    }

    /// Parses a comma-separated list such as `0,1e-7,1e-6`.
    pub fn parse(text: &str) -> Result<Self> {
        let deltas = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Ladder(format!("cannot parse `{}`", s.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&deltas)
    }

    pub fn bounds(&self) -> &[ErrorBound] {
        &self.bounds
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.bounds.iter().map(|b| b.delta()).collect()
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// FNV-1a over the little-endian bound bits.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in &self.bounds {
            for byte in b.delta().to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

impl Default for ErrorBoundLadder {
    /// `[0, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3]`.
    fn default() -> Self {
        Self::new(&[0.0, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3]).unwrap()
    }
}

impl std::fmt::Display for ErrorBoundLadder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .bounds
            .iter()
            .map(|b| format!("{:e}", b.delta()))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Minimum acceptable per-stride compression ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RatioThreshold(f64);

impl RatioThreshold {
    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() && theta >= 1.0 {
            Ok(Self(theta))
        } else {
            Err(Error::Threshold(theta))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Outcome of adaptively compressing one stride.
#[derive(Debug, Clone, PartialEq)]
pub struct StrideCompressReport {
    pub stride_index: usize,
    /// Ladder position of `chosen_delta`.
    pub level: usize,
    pub chosen_delta: f64,
    pub ratio: f64,
    pub bytes_in: usize,
    pub bytes_out: usize,
    pub threshold_met: bool,
}

/// One stride at rest: both planes plus the factor converting stored
/// values to the units of the rest of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredStride {
    pub re: CompressedBlock,
    pub im: CompressedBlock,
    pub scale: f64,
    /// `Σ|scale·stored|²`, exact over the reconstructed values.
    pub sum_sq: f64,
    pub chosen_delta: f64,
}

impl StoredStride {
    pub fn encoded_len(&self) -> usize {
        self.re.encoded_len() + self.im.encoded_len()
    }

    pub fn ratio(&self) -> f64 {
        let bytes_in = self.re.scalar_count as usize * AMPLITUDE_BYTES;
        bytes_in as f64 / self.encoded_len() as f64
    }
}

/// Resident compressed form of the whole state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedState {
    pub(crate) geometry: StateGeometry,
    pub(crate) strides: Vec<StoredStride>,
    pub(crate) norm: NormAccumulator,
    pub(crate) pending_scale: f64,
    pub(crate) gates_applied: u64,
}

impl CompressedState {
    /// Computational basis state `e_index`, stored losslessly.
    pub fn init_basis_state(geometry: StateGeometry, basis_index: usize) -> Result<Self> {
        geometry.check_index(basis_index)?;
        let (hot, offset) = geometry.locate(basis_index);
        let len = geometry.stride_len();
        let zeros = vec![0.0; len];
        let zero_block = crate::codec::compress_lossless(&zeros)?;
        let mut ones = zeros;
        ones[offset] = 1.0;
        let hot_block = crate::codec::compress_lossless(&ones)?;
        let strides = (0..geometry.n_strides())
            .map(|j| StoredStride {
                re: if j == hot {
                    hot_block.clone()
                } else {
                    zero_block.clone()
                },
                im: zero_block.clone(),
                scale: 1.0,
                sum_sq: if j == hot { 1.0 } else { 0.0 },
                chosen_delta: 0.0,
            })
            .collect();
        Ok(Self {
            geometry,
            strides,
            norm: NormAccumulator::from_sum_sq(1.0),
            pending_scale: 1.0,
            gates_applied: 0,
        })
    }

    pub fn geometry(&self) -> StateGeometry {
        self.geometry
    }

    pub fn strides(&self) -> &[StoredStride] {
        &self.strides
    }

    pub fn pending_scale(&self) -> f64 {
        self.pending_scale
    }

    pub fn norm(&self) -> NormAccumulator {
        self.norm
    }

    /// Gates applied since the initial basis state.
    pub fn gates_applied(&self) -> u64 {
        self.gates_applied
    }

    pub fn compressed_bytes(&self) -> usize {
        self.strides.iter().map(StoredStride::encoded_len).sum()
    }

    pub fn min_ratio(&self) -> f64 {
        self.strides
            .iter()
            .map(StoredStride::ratio)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean_ratio(&self) -> f64 {
        self.strides.iter().map(StoredStride::ratio).sum::<f64>() / self.strides.len() as f64
    }

    /// `Σ|α|²` of the logical state as tracked by the accumulator.
    pub fn tracked_norm_sqr(&self) -> f64 {
        self.norm.sum_sq() * self.pending_scale * self.pending_scale
    }

    /// Stored values of stride `j`, multiplied by `factor`.
    fn load_stride(&self, codec: &dyn Codec, j: usize, factor: f64) -> Result<StrideBuffer> {
        let s = &self.strides[j];
        let re = codec.decompress(&s.re)?;
        let im = codec.decompress(&s.im)?;
        let mut buf = StrideBuffer::from_planes(j, &re, &im);
        buf.scale(factor);
        Ok(buf)
    }

    /// Decompresses stride `j` in normalized units.
    pub fn decompress_stride(&self, j: usize) -> Result<StrideBuffer> {
        let factor = self.pending_scale * self.strides[j].scale;
        self.load_stride(&BuiltinCodec, j, factor)
    }

    /// Full normalized amplitude vector.
    pub fn to_amplitudes(&self) -> Result<Vec<Amplitude>> {
        let mut out = Vec::with_capacity(self.geometry.n_amplitudes());
        for j in 0..self.strides.len() {
            out.extend(self.decompress_stride(j)?.amplitudes);
        }
        Ok(out)
    }

    /// `Σ|α|²` recomputed by decompressing every stride.
    pub fn measured_norm_sqr(&self) -> Result<f64> {
        let mut total = 0.0;
        for j in 0..self.strides.len() {
            total += self.decompress_stride(j)?.sum_sq();
        }
        Ok(total)
    }
}

/// Tries each ladder level in turn and keeps the first compression whose
/// ratio reaches `theta`, or the last level's result if none does.
pub fn compress_stride_adaptive(
    buf: &StrideBuffer,
    ladder: &ErrorBoundLadder,
    theta: RatioThreshold,
) -> Result<(StoredStride, StrideCompressReport)> {
    compress_stride_with(&BuiltinCodec, buf, ladder, theta)
}

fn compress_stride_with(
    codec: &dyn Codec,
    buf: &StrideBuffer,
    ladder: &ErrorBoundLadder,
    theta: RatioThreshold,
) -> Result<(StoredStride, StrideCompressReport)> {
    if !buf.is_finite() {
        return Err(Error::NonFinite);
    }
    let (re, im) = buf.planes();
    let bytes_in = buf.amplitudes.len() * AMPLITUDE_BYTES;
    let mut last = None;
    for (level, &bound) in ladder.bounds().iter().enumerate() {
        let (re_block, re_recon) = codec.compress(&re, bound)?;
        let (im_block, im_recon) = codec.compress(&im, bound)?;
        let bytes_out = re_block.encoded_len() + im_block.encoded_len();
        let ratio = bytes_in as f64 / bytes_out as f64;
        let met = ratio >= theta.value();
        let is_last = level + 1 == ladder.len();
        if met || is_last {
            let sum_sq = re_recon
                .iter()
                .zip(&im_recon)
                .map(|(a, b)| a * a + b * b)
                .sum();
            let stored = StoredStride {
                re: re_block,
                im: im_block,
                scale: 1.0,
                sum_sq,
                chosen_delta: bound.delta(),
            };
            let report = StrideCompressReport {
                stride_index: buf.stride_index,
                level,
                chosen_delta: bound.delta(),
                ratio,
                bytes_in,
                bytes_out,
                threshold_met: met,
            };
            last = Some((stored, report));
            break;
        }
    }
    Ok(last.expect("ladder is non-empty"))
}

/// Strides a gate must decompress together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WorkUnit {
    One(usize),
    Pair(usize, usize),
}

fn work_units(geometry: &StateGeometry, gate: &GateOp) -> Vec<WorkUnit> {
    let s = geometry.stride_bits();
    let n_strides = geometry.n_strides();
    match *gate {
        GateOp::PhaseFlip { index } => vec![WorkUnit::One(geometry.locate(index).0)],
        GateOp::Single { target, .. } | GateOp::Controlled { target, .. } => {
            let fires = |j: usize| gate.control().is_none_or(|c| stride_fires(j, c, s));
            if is_local(target, s) {
                (0..n_strides)
                    .filter(|&j| fires(j))
                    .map(WorkUnit::One)
                    .collect()
            } else {
                (0..n_strides)
                    .filter(|&j| fires(j))
                    .filter_map(|j| partner_stride(j, target, s).map(|hi| WorkUnit::Pair(j, hi)))
                    .collect()
            }
        }
    }
}

fn apply_to_one(buf: &mut StrideBuffer, gate: &GateOp, geometry: &StateGeometry) -> Result<()> {
    let s = geometry.stride_bits();
    match *gate {
        GateOp::PhaseFlip { index } => {
            apply_diag_phase_flip(buf, index, geometry)?;
        }
        GateOp::Single { gate: g, target } => apply_single_in_stride(buf, &g.unitary(), target, s)?,
        GateOp::Controlled {
            gate: g,
            control,
            target,
        } => apply_controlled_in_stride(buf, &g.unitary(), control, target, s)?,
    }
    Ok(())
}

fn apply_to_pair(
    lo: &mut StrideBuffer,
    hi: &mut StrideBuffer,
    gate: &GateOp,
    stride_bits: usize,
) -> Result<()> {
    match *gate {
        GateOp::Single { gate: g, target } => {
            apply_single_cross_stride(lo, hi, &g.unitary(), target, stride_bits)
        }
        GateOp::Controlled {
            gate: g,
            control,
            target,
        } => apply_controlled_cross_stride(lo, hi, &g.unitary(), control, target, stride_bits),
        GateOp::PhaseFlip { .. } => unreachable!("phase flips never span strides"),
    }
}

/// Everything a gate produced, before it is committed to the state.
#[derive(Debug, Clone)]
pub struct GateOutcome {
    pub reports: Vec<StrideCompressReport>,
    pub record: GateRecord,
}

/// Accumulated output of a program run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub records: Vec<GateRecord>,
    /// Minimum stride ratio of the state before the first gate.
    pub initial_min_ratio: f64,
    /// Minimum over the initial state and every gate record.
    pub overall_min_ratio: f64,
    /// Strides whose last ladder level still missed the threshold.
    pub threshold_violations: u64,
    /// Gates after which every amplitude had been quantized to zero.
    pub norm_collapses: u64,
    /// Wall time of the run, seconds.
    pub total_elapsed: f64,
}

impl RunMetrics {
    fn new(initial_min_ratio: f64) -> Self {
        Self {
            initial_min_ratio,
            overall_min_ratio: initial_min_ratio,
            ..Self::default()
        }
    }

    fn push(&mut self, outcome: &GateOutcome) {
        self.overall_min_ratio = self.overall_min_ratio.min(outcome.record.min_ratio);
        self.threshold_violations +=
            outcome.reports.iter().filter(|r| !r.threshold_met).count() as u64;
        if outcome.record.norm_after == 0.0 {
            self.norm_collapses += 1;
        }
        self.records.push(outcome.record.clone());
    }
}

/// Runs circuits on a [`CompressedState`] under one ladder and threshold.
pub struct Simulator {
    ladder: ErrorBoundLadder,
    theta: RatioThreshold,
    codec: Box<dyn Codec>,
    pool: Option<rayon::ThreadPool>,
}

impl Simulator {
    pub fn new(ladder: ErrorBoundLadder, theta: RatioThreshold) -> Self {
        Self {
            ladder,
            theta,
            codec: Box::new(BuiltinCodec),
            pool: None,
        }
    }

    /// Processes strides on `workers` threads. One worker runs inline.
    pub fn with_workers(mut self, workers: usize) -> Result<Self> {
        self.pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::Pool(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(self)
    }

    pub fn with_codec(mut self, codec: Box<dyn Codec>) -> Self {
        self.codec = codec;
        self
    }

    pub fn ladder(&self) -> &ErrorBoundLadder {
        &self.ladder
    }

    pub fn theta(&self) -> RatioThreshold {
        self.theta
    }

    fn process_unit(
        &self,
        state: &CompressedState,
        unit: WorkUnit,
        gate: &GateOp,
    ) -> Result<Vec<(StoredStride, StrideCompressReport)>> {
        let geometry = &state.geometry;
        let load = |j: usize| {
            let factor = state.pending_scale * state.strides[j].scale;
            state.load_stride(self.codec.as_ref(), j, factor)
        };
        let mut bufs = match unit {
            WorkUnit::One(j) => {
                let mut buf = load(j)?;
                apply_to_one(&mut buf, gate, geometry)?;
                vec![buf]
            }
            WorkUnit::Pair(lo, hi) => {
                let (mut a, mut b) = (load(lo)?, load(hi)?);
                apply_to_pair(&mut a, &mut b, gate, geometry.stride_bits())?;
                vec![a, b]
            }
        };
        bufs.iter_mut()
            .map(|buf| {
                buf.flush_denormals();
                compress_stride_with(self.codec.as_ref(), buf, &self.ladder, self.theta)
            })
            .collect()
    }

    /// Applies one gate. On error the state is left as it was.
    pub fn apply_gate(&self, state: &mut CompressedState, gate: &GateOp) -> Result<GateOutcome> {
        let start = Instant::now();
        gate.validate(state.geometry.n_qubits())?;
        let units = work_units(&state.geometry, gate);

        let shared: &CompressedState = state;
        let results: Vec<Vec<(StoredStride, StrideCompressReport)>> = match &self.pool {
            Some(pool) => pool.install(|| {
                units
                    .par_iter()
                    .map(|&u| self.process_unit(shared, u, gate))
                    .collect::<Result<_>>()
            })?,
            None => units
                .iter()
                .map(|&u| self.process_unit(shared, u, gate))
                .collect::<Result<_>>()?,
        };
        let mut fresh: Vec<(StoredStride, StrideCompressReport)> =
            results.into_iter().flatten().collect();
        fresh.sort_by_key(|(_, r)| r.stride_index);

        // Norm of the would-be state, summed in stride order so the result
        // does not depend on scheduling.
        let pending = state.pending_scale;
        let mut touched = vec![None; state.strides.len()];
        for (k, (_, r)) in fresh.iter().enumerate() {
            touched[r.stride_index] = Some(k);
        }
        let mut acc = NormAccumulator::new();
        for (j, slot) in touched.iter().enumerate() {
            match slot {
                Some(k) => acc.add(fresh[*k].0.sum_sq),
                None => acc.add(state.strides[j].sum_sq * pending * pending),
            }
        }
        // A state quantized to exactly zero cannot be renormalized; it stays
        // zero and the record shows norm 0.
        let next_pending = if acc.sum_sq() == 0.0 {
            1.0
        } else {
            acc.normalization_factor()?
        };

        let mut reports = Vec::with_capacity(fresh.len());
        let mut max_delta: f64 = 0.0;
        let mut fresh_iter = fresh.into_iter();
        for (j, slot) in touched.iter().enumerate() {
            if slot.is_some() {
                let (stored, report) = fresh_iter.next().expect("one entry per touched stride");
                debug_assert_eq!(report.stride_index, j);
                max_delta = max_delta.max(report.chosen_delta);
                state.strides[j] = stored;
                reports.push(report);
            } else {
                let s = &mut state.strides[j];
                s.scale *= pending;
                s.sum_sq *= pending * pending;
            }
        }
        state.norm = acc;
        state.pending_scale = next_pending;
        state.gates_applied += 1;

        let record = GateRecord {
            gate_index: (state.gates_applied - 1) as usize,
            gate_label: gate.label().to_string(),
            stride_count: reports.len(),
            min_ratio: state.min_ratio(),
            mean_ratio: state.mean_ratio(),
            max_chosen_delta: max_delta,
            bytes_before: state.geometry.raw_bytes() as u64,
            bytes_after: state.compressed_bytes() as u64,
            elapsed_ns: start.elapsed().as_nanos() as u64,
            norm_after: state.tracked_norm_sqr(),
        };
        Ok(GateOutcome { reports, record })
    }

    /// Applies `program.gates[from..to]` to `state`.
    pub fn run_range(
        &self,
        state: &mut CompressedState,
        program: &CircuitProgram,
        from: usize,
        to: usize,
        metrics: &mut RunMetrics,
    ) -> Result<()> {
        if program.n_qubits != state.geometry.n_qubits() {
            return Err(Error::QubitMismatch {
                program: program.n_qubits,
                state: state.geometry.n_qubits(),
            });
        }
        let start = Instant::now();
        for index in from..to.min(program.gates.len()) {
            let outcome =
                self.apply_gate(state, &program.gates[index])
                    .map_err(|e| Error::Gate {
                        index,
                        source: Box::new(e),
                    })?;
            metrics.push(&outcome);
        }
        metrics.total_elapsed += start.elapsed().as_secs_f64();
        Ok(())
    }

    /// Runs the whole program from basis state `init`.
    pub fn run_program(
        &self,
        program: &CircuitProgram,
        geometry: StateGeometry,
        init: usize,
    ) -> Result<(CompressedState, RunMetrics)> {
        if program.n_qubits != geometry.n_qubits() {
            return Err(Error::QubitMismatch {
                program: program.n_qubits,
                state: geometry.n_qubits(),
            });
        }
        let mut state = CompressedState::init_basis_state(geometry, init)?;
        let mut metrics = RunMetrics::new(state.min_ratio());
        self.run_range(&mut state, program, 0, program.gates.len(), &mut metrics)?;
        Ok((state, metrics))
    }

    /// Continues a run from `state.gates_applied()` to the end of `program`.
    pub fn resume(
        &self,
        state: &mut CompressedState,
        program: &CircuitProgram,
    ) -> Result<RunMetrics> {
        let mut metrics = RunMetrics::new(state.min_ratio());
        let from = state.gates_applied as usize;
        self.run_range(state, program, from, program.gates.len(), &mut metrics)?;
        Ok(metrics)
    }
}
