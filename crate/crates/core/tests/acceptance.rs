//! Acceptance suite. Each test checks one numbered criterion and prints a
//! single `PASS` or `FAIL` line before asserting.
//!
//! The expensive runs (QFT-16 at two thresholds, Grover-16, the fixed-bound
//! and lossless QFT-16 runs) are computed once and shared; the
//! normalization criterion inspects all of them.

use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stridesim::checkpoint::{checkpoint_load, checkpoint_save};
use stridesim::circuit::{build_grover, build_qft, build_random, default_grover_iterations};
use stridesim::codec::{compress, decompress, ErrorBound};
use stridesim::experiment::{compare, RunConfig};
use stridesim::gate::{
    apply_controlled_cross_stride, apply_controlled_in_stride, apply_diag_phase_flip,
    apply_single_cross_stride, apply_single_in_stride, is_local, partner_stride, GateOp,
};
use stridesim::metrics::{emit_csv, GateRecord};
use stridesim::reference::{fidelity, run_dense_from, DEFAULT_DENSE_LIMIT};
use stridesim::{
    CircuitProgram, CompressedState, ErrorBoundLadder, RatioThreshold, RunMetrics, Simulator,
    StateGeometry, StrideBuffer,
};

/// Basis state fed to every QFT benchmark run.
const QFT_INIT: usize = 1;
/// Marked element of the Grover benchmark.
const GROVER_MARKED: usize = 5;

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {id:>2} [{name}]: {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn theta(t: f64) -> RatioThreshold {
    RatioThreshold::new(t).unwrap()
}

/// One compressed run with the dense reference and the measured norm of
/// the decompressed state after every gate.
struct Run {
    label: &'static str,
    state: CompressedState,
    metrics: RunMetrics,
    reference: Vec<Complex64>,
    fidelity: f64,
    norms: Vec<f64>,
    elapsed: f64,
}

fn run_traced(
    label: &'static str,
    program: &CircuitProgram,
    sim: &Simulator,
    geometry: StateGeometry,
    init: usize,
) -> Run {
    let t0 = Instant::now();
    let mut state = CompressedState::init_basis_state(geometry, init).unwrap();
    let mut metrics = RunMetrics {
        initial_min_ratio: state.min_ratio(),
        overall_min_ratio: state.min_ratio(),
        ..RunMetrics::default()
    };
    let mut norms = Vec::with_capacity(program.len());
    for i in 0..program.len() {
        sim.run_range(&mut state, program, i, i + 1, &mut metrics)
            .unwrap();
        norms.push(state.measured_norm_sqr().unwrap().sqrt());
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let reference = run_dense_from(program, init, DEFAULT_DENSE_LIMIT)
        .unwrap()
        .amplitudes;
    let amplitudes = state.to_amplitudes().unwrap();
    let fidelity = fidelity(&reference, &amplitudes).unwrap();
    Run {
        label,
        state,
        metrics,
        reference,
        fidelity,
        norms,
        elapsed,
    }
}

fn default_sim(t: f64, workers: usize) -> Simulator {
    Simulator::new(ErrorBoundLadder::default(), theta(t))
        .with_workers(workers)
        .unwrap()
}

fn qft16() -> &'static CircuitProgram {
    static P: OnceLock<CircuitProgram> = OnceLock::new();
    P.get_or_init(|| build_qft(16).unwrap())
}

fn geometry(n: usize) -> StateGeometry {
    StateGeometry::with_default_stride(n).unwrap()
}

fn qft16_theta4() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| {
        run_traced(
            "qft16 theta=4",
            qft16(),
            &default_sim(4.0, 1),
            geometry(16),
            QFT_INIT,
        )
    })
}

fn qft16_theta16() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| {
        run_traced(
            "qft16 theta=16",
            qft16(),
            &default_sim(16.0, 1),
            geometry(16),
            QFT_INIT,
        )
    })
}

fn qft16_fixed() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| {
        let sim = Simulator::new(ErrorBoundLadder::fixed(0.1).unwrap(), theta(4.0));
        run_traced("qft16 fixed 0.1", qft16(), &sim, geometry(16), QFT_INIT)
    })
}

fn qft16_lossless() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| {
        let sim = Simulator::new(ErrorBoundLadder::lossless(), theta(1.0));
        run_traced("qft16 lossless", qft16(), &sim, geometry(16), QFT_INIT)
    })
}

fn grover16() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| {
        let p = build_grover(16, GROVER_MARKED, None).unwrap();
        run_traced(
            "grover16 theta=32",
            &p,
            &default_sim(32.0, 1),
            geometry(16),
            0,
        )
    })
}

fn lossless12() -> &'static [Run; 2] {
    static R: OnceLock<[Run; 2]> = OnceLock::new();
    R.get_or_init(|| {
        let sim = Simulator::new(ErrorBoundLadder::lossless(), theta(1.0));
        [
            run_traced(
                "qft12 lossless",
                &build_qft(12).unwrap(),
                &sim,
                geometry(12),
                QFT_INIT,
            ),
            run_traced(
                "grover12 lossless",
                &build_grover(12, GROVER_MARKED, None).unwrap(),
                &sim,
                geometry(12),
                0,
            ),
        ]
    })
}

fn min_gate_ratio(records: &[GateRecord]) -> f64 {
    records
        .iter()
        .map(|r| r.min_ratio)
        .fold(f64::INFINITY, f64::min)
}

fn qubit_gain(min_ratio: f64) -> i64 {
    min_ratio.log2().floor() as i64
}

#[test]
fn criterion_01_codec_error_bound() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c0d_ec01);
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    for &delta in &[1e-7, 1e-5, 1e-3] {
        let bound = ErrorBound::new(delta).unwrap();
        for chunk in 0..16 {
            let len = 1 << 16;
            // Alternate between amplitude-sized values, wide-range values and
            // a smooth signal so every token kind is exercised.
            let data: Vec<f64> = match chunk % 3 {
                0 => (0..len).map(|_| rng.gen_range(-1.0..1.0) / 256.0).collect(),
                1 => (0..len)
                    .map(|_| rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-12..4)))
                    .collect(),
                _ => (0..len).map(|i| (i as f64 * 1e-3).sin() * 0.01).collect(),
            };
            let block = compress(&data, bound).unwrap();
            let back = decompress(&block).unwrap();
            assert_eq!(back.len(), data.len());
            for (x, y) in data.iter().zip(&back) {
                let err = (x - y).abs();
                worst = worst.max(err / delta);
                if err > delta {
                    violations += 1;
                }
            }
            checked += len;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        1,
        "codec error bound",
        checked >= 1_000_000 && violations == 0 && secs < 60.0,
        &format!(
            "{checked} scalars, {violations} violations, worst err/delta {worst:.4}, {secs:.2}s"
        ),
    );
}

#[test]
fn criterion_02_lossless_transparency() {
    let runs = lossless12();
    let mut details = Vec::new();
    let mut pass = true;
    for run in runs {
        let amps = run.state.to_amplitudes().unwrap();
        let max_diff = amps
            .iter()
            .zip(&run.reference)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let ok = max_diff <= 1e-12 && (1.0 - run.fidelity).abs() <= 1e-12 && run.elapsed < 60.0;
        pass &= ok;
        details.push(format!(
            "{}: max |diff| {max_diff:.2e}, 1-F {:.2e}, {:.2}s",
            run.label,
            1.0 - run.fidelity,
            run.elapsed
        ));
    }
    verdict(2, "lossless transparency", pass, &details.join("; "));
}

#[test]
fn criterion_03_qft_tradeoff() {
    let mut pass = true;
    let mut details = Vec::new();
    for (t, run) in [(4.0, qft16_theta4()), (16.0, qft16_theta16())] {
        let min = min_gate_ratio(&run.metrics.records);
        let ratio_ok = min >= t || run.metrics.threshold_violations == 0;
        let ok = ratio_ok && run.fidelity >= 0.99 && run.elapsed < 600.0;
        pass &= ok;
        details.push(format!(
            "theta={t}: min gate ratio {min:.3}, violations {}, fidelity {:.6}, {:.2}s",
            run.metrics.threshold_violations, run.fidelity, run.elapsed
        ));
    }
    let ordered = qft16_theta4().fidelity >= qft16_theta16().fidelity - 0.005;
    pass &= ordered;
    details.push(format!("F(4) >= F(16) - 0.005: {ordered}"));
    verdict(3, "qft fidelity/ratio trade-off", pass, &details.join("; "));
}

#[test]
fn criterion_04_fidelity_cliff() {
    let run = qft16_fixed();
    verdict(
        4,
        "fidelity cliff",
        run.fidelity < 0.9 && run.elapsed < 600.0,
        &format!(
            "fixed delta 0.1: fidelity {:.6}, zero-norm gates {}, {:.2}s",
            run.fidelity, run.metrics.norm_collapses, run.elapsed
        ),
    );
}

#[test]
fn criterion_05_grover_compressibility() {
    let run = grover16();
    let min = run.metrics.overall_min_ratio;
    let gain = qubit_gain(min);
    verdict(
        5,
        "grover compressibility",
        min >= 32.0 && run.fidelity >= 0.99 && gain >= 5 && run.elapsed < 300.0,
        &format!(
            "{} iterations, marked {GROVER_MARKED}: min ratio {min:.3}, qubit gain {gain}, \
             fidelity {:.6}, violations {}, {:.2}s",
            default_grover_iterations(16),
            run.fidelity,
            run.metrics.threshold_violations,
            run.elapsed
        ),
    );
}

#[test]
fn criterion_06_lossless_endgame() {
    let run = qft16_lossless();
    let last = run.metrics.records.last().unwrap().min_ratio;
    verdict(
        6,
        "lossless endgame degradation",
        last < 1.5 && run.elapsed < 300.0,
        &format!("final-gate min ratio {last:.4}, {:.2}s", run.elapsed),
    );
}

#[test]
fn criterion_07_normalization() {
    let lossless = lossless12();
    let runs: [&Run; 7] = [
        &lossless[0],
        &lossless[1],
        qft16_theta4(),
        qft16_theta16(),
        qft16_fixed(),
        grover16(),
        qft16_lossless(),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for run in runs {
        let bad: Vec<(usize, f64)> = run
            .norms
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, n)| (n - 1.0).abs() > 1e-9)
            .collect();
        let worst = run
            .norms
            .iter()
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max);
        if bad.is_empty() {
            details.push(format!(
                "{}: {} gates, max |norm-1| {worst:.2e}",
                run.label,
                run.norms.len()
            ));
        } else {
            pass = false;
            details.push(format!(
                "{}: {} of {} gates off (first at gate {} with norm {:.3e})",
                run.label,
                bad.len(),
                run.norms.len(),
                bad[0].0,
                bad[0].1
            ));
        }
    }
    verdict(7, "normalization invariant", pass, &details.join("; "));
}

type Matrix = Vec<Vec<Complex64>>;

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn two(m: [[Complex64; 2]; 2]) -> Matrix {
    m.iter().map(|r| r.to_vec()).collect()
}

/// Kronecker product of per-qubit factors, qubit `n-1` leftmost.
fn kron_chain(n: usize, factor: impl Fn(usize) -> Matrix) -> Matrix {
    let mut m = vec![vec![Complex64::new(1.0, 0.0)]];
    for q in (0..n).rev() {
        m = kron(&m, &factor(q));
    }
    m
}

fn gate_matrix(gate: &GateOp, n: usize) -> Matrix {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let id = two([[one, zero], [zero, one]]);
    match *gate {
        GateOp::Single { target, .. } => {
            let u = two(gate.unitary().unwrap().entries());
            kron_chain(n, |q| if q == target { u.clone() } else { id.clone() })
        }
        GateOp::Controlled {
            control, target, ..
        } => {
            let u = two(gate.unitary().unwrap().entries());
            let p0 = two([[one, zero], [zero, zero]]);
            let p1 = two([[zero, zero], [zero, one]]);
            let idle = kron_chain(n, |q| if q == control { p0.clone() } else { id.clone() });
            let active = kron_chain(n, |q| match q {
                q if q == control => p1.clone(),
                q if q == target => u.clone(),
                _ => id.clone(),
            });
            idle.iter()
                .zip(&active)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect()
        }
        GateOp::PhaseFlip { index } => {
            let dim = 1 << n;
            (0..dim)
                .map(|i| {
                    let mut row = vec![zero; dim];
                    row[i] = if i == index { -one } else { one };
                    row
                })
                .collect()
        }
    }
}

fn mat_vec(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Applies one gate to a state split into strides using the stride kernels.
fn apply_strided(strides: &mut [StrideBuffer], gate: &GateOp, geometry: &StateGeometry) {
    let s = geometry.stride_bits();
    if let GateOp::PhaseFlip { index } = *gate {
        for buf in strides.iter_mut() {
            apply_diag_phase_flip(buf, index, geometry).unwrap();
        }
        return;
    }
    let u = gate.unitary().unwrap();
    let target = gate.target().unwrap();
    let control = gate.control();
    if is_local(target, s) {
        for buf in strides.iter_mut() {
            match control {
                Some(c) => apply_controlled_in_stride(buf, &u, c, target, s).unwrap(),
                None => apply_single_in_stride(buf, &u, target, s).unwrap(),
            }
        }
        return;
    }
    for j in 0..strides.len() {
        let Some(k) = partner_stride(j, target, s) else {
            continue;
        };
        let (head, tail) = strides.split_at_mut(k);
        let (lo, hi) = (&mut head[j], &mut tail[0]);
        match control {
            Some(c) => apply_controlled_cross_stride(lo, hi, &u, c, target, s).unwrap(),
            None => apply_single_cross_stride(lo, hi, &u, target, s).unwrap(),
        }
    }
}

#[test]
fn criterion_08_gate_engine_oracle() {
    let mut configs = 0;
    let mut worst = 0.0f64;
    for n in 1..=10usize {
        let program = build_random(n, 100, 0x5eed_0000 + n as u64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let start: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut expected = Vec::with_capacity(program.len());
        let mut v = start.clone();
        for gate in &program.gates {
            v = mat_vec(&gate_matrix(gate, n), &v);
            expected.push(v.clone());
        }
        for s in 0..=n {
            let geometry = StateGeometry::new(n, s).unwrap();
            let mut strides: Vec<StrideBuffer> = start
                .chunks(geometry.stride_len())
                .enumerate()
                .map(|(j, c)| StrideBuffer::new(j, c.to_vec()))
                .collect();
            for (gate, want) in program.gates.iter().zip(&expected) {
                apply_strided(&mut strides, gate, &geometry);
                let got = strides.iter().flat_map(|b| b.amplitudes.iter());
                for (a, b) in got.zip(want) {
                    worst = worst.max((a - b).norm());
                }
            }
            configs += 1;
        }
    }
    verdict(
        8,
        "gate-engine oracle equivalence",
        worst <= 1e-12,
        &format!("{configs} (n, stride_bits) configurations x 100 gates, max |diff| {worst:.2e}"),
    );
}

#[test]
fn criterion_09_checkpoint_determinism() {
    let program = build_qft(12).unwrap();
    let geometry = StateGeometry::new(12, 8).unwrap();
    let ladder = ErrorBoundLadder::default();
    let sim = Simulator::new(ladder.clone(), theta(4.0));
    let (whole, _) = sim.run_program(&program, geometry, QFT_INIT).unwrap();

    let mid = program.len() / 2;
    let mut first = CompressedState::init_basis_state(geometry, QFT_INIT).unwrap();
    sim.run_range(&mut first, &program, 0, mid, &mut RunMetrics::default())
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qft12.qckp");
    checkpoint_save(&first, ladder.fingerprint(), &path).unwrap();
    drop(first);
    let ckpt = checkpoint_load(&path).unwrap();
    assert_eq!(ckpt.ladder_fingerprint, ladder.fingerprint());
    let mut resumed = ckpt.state;
    sim.resume(&mut resumed, &program).unwrap();

    let a = whole.to_amplitudes().unwrap();
    let b = resumed.to_amplitudes().unwrap();
    let identical_amps = a
        .iter()
        .zip(&b)
        .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
    let identical_blocks = whole == resumed;
    verdict(
        9,
        "checkpoint determinism",
        identical_amps && identical_blocks,
        &format!(
            "resume at gate {mid} of {}: amplitudes bit-identical {identical_amps}, \
             stored state identical {identical_blocks}",
            program.len()
        ),
    );
}

#[test]
fn criterion_10_overhead_reporting() {
    let program = build_qft(14).unwrap();
    let mut cfg = RunConfig::new(ErrorBoundLadder::default(), theta(4.0));
    cfg.init = QFT_INIT;
    let out = compare(&program, &cfg).unwrap();
    let overhead = out.overhead_factor().unwrap_or(f64::NAN);
    verdict(
        10,
        "overhead reporting",
        overhead.is_finite() && overhead > 1.0,
        &format!(
            "qft14: compressed {:.4}s, reference {:.4}s, overhead factor {overhead:.2}",
            out.summary.total_elapsed, out.reference_elapsed
        ),
    );
}

fn csv_without_timing(records: &[GateRecord]) -> String {
    let stripped: Vec<GateRecord> = records
        .iter()
        .map(|r| GateRecord {
            elapsed_ns: 0,
            ..r.clone()
        })
        .collect();
    emit_csv(&stripped).unwrap()
}

#[test]
fn criterion_11_worker_determinism() {
    let mut pass = true;
    let mut details = Vec::new();
    for (t, single) in [(4.0, qft16_theta4()), (16.0, qft16_theta16())] {
        let sim = default_sim(t, 8);
        let (_, metrics) = sim.run_program(qft16(), geometry(16), QFT_INIT).unwrap();
        let same =
            csv_without_timing(&single.metrics.records) == csv_without_timing(&metrics.records);
        pass &= same;
        details.push(format!("theta={t}: identical {same}"));
    }
    // The default geometry holds QFT-16 in one stride; repeat with 64 strides
    // so the pool actually splits the work.
    let split = StateGeometry::new(16, 10).unwrap();
    let one = default_sim(16.0, 1)
        .run_program(qft16(), split, QFT_INIT)
        .unwrap()
        .1;
    let eight = default_sim(16.0, 8)
        .run_program(qft16(), split, QFT_INIT)
        .unwrap()
        .1;
    let same = csv_without_timing(&one.records) == csv_without_timing(&eight.records);
    pass &= same;
    details.push(format!("theta=16 stride_bits=10: identical {same}"));
    verdict(11, "worker-count determinism", pass, &details.join("; "));
}
