//! Properties of the compressed pipeline: agreement with the dense
//! reference, the ladder escalation order and the threshold contract.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stridesim::circuit::{build_qft, build_random};
use stridesim::codec::{compress, ErrorBound};
use stridesim::reference::{fidelity, run_dense_from};
use stridesim::state::AMPLITUDE_BYTES;
use stridesim::{
    compress_stride_adaptive, Amplitude, CompressedState, ErrorBoundLadder, GateOp, RatioThreshold,
    Simulator, StateGeometry, StrideBuffer,
};

fn lossless_sim(workers: usize) -> Simulator {
    Simulator::new(
        ErrorBoundLadder::lossless(),
        RatioThreshold::new(1.0).unwrap(),
    )
    .with_workers(workers)
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lossless_pipeline_equals_dense(
        n in 1usize..=9,
        stride_frac in 0.0f64..=1.0,
        gates in 1usize..80,
        seed in any::<u64>(),
        init_frac in 0.0f64..1.0,
        workers in 1usize..4,
    ) {
        let s = (stride_frac * n as f64).round() as usize;
        let init = (init_frac * (1usize << n) as f64) as usize;
        let program = build_random(n, gates, seed).unwrap();
        let (state, metrics) = lossless_sim(workers)
            .run_program(&program, StateGeometry::new(n, s).unwrap(), init)
            .unwrap();
        let dense = run_dense_from(&program, init, 26).unwrap();
        let amps = state.to_amplitudes().unwrap();
        for (a, b) in amps.iter().zip(&dense.amplitudes) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        prop_assert_eq!(metrics.records.len(), gates);
        prop_assert!((state.measured_norm_sqr().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn skipped_strides_keep_their_blocks() {
    // Control on the top qubit fires only in the upper half of the strides.
    let geometry = StateGeometry::new(8, 4).unwrap();
    let sim = lossless_sim(1);
    let mut program = build_random(8, 40, 3).unwrap();
    let (mut state, _) = sim.run_program(&program, geometry, 0).unwrap();
    let before: Vec<_> = state
        .strides()
        .iter()
        .map(|s| (s.re.clone(), s.im.clone()))
        .collect();
    program.gates.clear();
    program.push(GateOp::cx(7, 1).unwrap()).unwrap();
    let outcome = sim.apply_gate(&mut state, &program.gates[0]).unwrap();
    let touched: Vec<usize> = outcome.reports.iter().map(|r| r.stride_index).collect();
    assert_eq!(touched, (8..16).collect::<Vec<_>>());
    for (j, s) in state.strides().iter().enumerate().take(8) {
        assert_eq!((&s.re, &s.im), (&before[j].0, &before[j].1));
    }
}

fn random_stride(len: usize, seed: u64) -> StrideBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (len as f64).sqrt().recip();
    let amps = (0..len)
        .map(|_| {
            Amplitude::new(
                rng.gen_range(-1.0..1.0) * scale,
                rng.gen_range(-1.0..1.0) * scale,
            )
        })
        .collect();
    StrideBuffer::new(0, amps)
}

#[test]
fn escalation_picks_first_sufficient_level() {
    let ladder = ErrorBoundLadder::default();
    for seed in 0..6 {
        let buf = random_stride(1 << 10, seed);
        let (re, im) = buf.planes();
        let ratios: Vec<f64> = ladder
            .bounds()
            .iter()
            .map(|&b| {
                let bytes = compress(&re, b).unwrap().encoded_len()
                    + compress(&im, b).unwrap().encoded_len();
                (buf.amplitudes.len() * AMPLITUDE_BYTES) as f64 / bytes as f64
            })
            .collect();
        for theta in [1.0, 2.0, 4.0, 6.0, 16.0, 1e6] {
            let (stored, report) =
                compress_stride_adaptive(&buf, &ladder, RatioThreshold::new(theta).unwrap())
                    .unwrap();
            let want = ratios
                .iter()
                .position(|&r| r >= theta)
                .unwrap_or(ladder.len() - 1);
            assert_eq!(
                report.level, want,
                "seed {seed} theta {theta} ratios {ratios:?}"
            );
            assert_eq!(report.chosen_delta, ladder.deltas()[want]);
            assert_eq!(report.ratio, ratios[want]);
            assert_eq!(report.threshold_met, ratios[want] >= theta);
            assert_eq!(stored.chosen_delta, report.chosen_delta);
        }
    }
}

#[test]
fn stored_values_respect_chosen_bound() {
    let ladder = ErrorBoundLadder::default();
    let buf = random_stride(1 << 12, 99);
    let (stored, report) =
        compress_stride_adaptive(&buf, &ladder, RatioThreshold::new(4.0).unwrap()).unwrap();
    assert!(report.chosen_delta > 0.0);
    let re = stridesim::codec::decompress(&stored.re).unwrap();
    let im = stridesim::codec::decompress(&stored.im).unwrap();
    for (a, (r, i)) in buf.amplitudes.iter().zip(re.iter().zip(&im)) {
        assert!((a.re - r).abs() <= report.chosen_delta);
        assert!((a.im - i).abs() <= report.chosen_delta);
    }
}

#[test]
fn lossy_runs_report_violations_only_at_last_level() {
    let program = build_qft(12).unwrap();
    let ladder = ErrorBoundLadder::default();
    let top = *ladder.deltas().last().unwrap();
    let sim = Simulator::new(ladder, RatioThreshold::new(16.0).unwrap());
    let geometry = StateGeometry::new(12, 8).unwrap();
    let mut state = CompressedState::init_basis_state(geometry, 1).unwrap();
    for gate in &program.gates {
        let outcome = sim.apply_gate(&mut state, gate).unwrap();
        for r in &outcome.reports {
            if !r.threshold_met {
                assert_eq!(r.chosen_delta, top);
            } else {
                assert!(r.ratio >= 16.0);
            }
        }
    }
    let dense = run_dense_from(&program, 1, 26).unwrap();
    let f = fidelity(&dense.amplitudes, &state.to_amplitudes().unwrap()).unwrap();
    assert!(f > 0.5 && f <= 1.0);
}

#[test]
fn identical_results_for_any_worker_count() {
    let program = build_qft(12).unwrap();
    let geometry = StateGeometry::new(12, 6).unwrap();
    let run = |w| {
        Simulator::new(
            ErrorBoundLadder::default(),
            RatioThreshold::new(8.0).unwrap(),
        )
        .with_workers(w)
        .unwrap()
        .run_program(&program, geometry, 1)
        .unwrap()
    };
    let (base, base_m) = run(1);
    for w in [2, 3, 8] {
        let (state, m) = run(w);
        assert_eq!(state, base);
        assert_eq!(m.overall_min_ratio, base_m.overall_min_ratio);
        assert_eq!(m.threshold_violations, base_m.threshold_violations);
    }
}

#[test]
fn bound_zero_is_lossless() {
    let buf = random_stride(256, 5);
    let (re, _) = buf.planes();
    let block = compress(&re, ErrorBound::LOSSLESS).unwrap();
    let back = stridesim::codec::decompress(&block).unwrap();
    assert!(re
        .iter()
        .zip(&back)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}
