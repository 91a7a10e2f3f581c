//! Full state-vector quantum circuit simulation with the state held in
//! compressed strides.
//!
//! The amplitude vector is split into contiguous strides, each stored as a
//! pair of compressed blocks. Gates are applied stride by stride
//! (decompress, normalize, compute, recompress). Recompression walks a
//! ladder of absolute error bounds, starting lossless, until the stride
//! reaches a target compression ratio. A dense reference simulator
//! measures the fidelity cost of the lossy levels.
//!
//! ```
//! use stridesim::{build_qft, compare, ErrorBoundLadder, RatioThreshold, RunConfig};
//!
//! let program = build_qft(8).unwrap();
//! let mut cfg = RunConfig::new(ErrorBoundLadder::lossless(), RatioThreshold::new(1.0).unwrap());
//! cfg.init = 3;
//! let out = compare(&program, &cfg).unwrap();
//! assert!((out.fidelity - 1.0).abs() < 1e-12);
//! ```

pub mod aalc;
pub mod checkpoint;
pub mod circuit;
pub mod codec;
pub mod error;
pub mod experiment;
pub mod gate;
pub mod metrics;
pub mod reference;
pub mod state;

pub use aalc::{
    compress_stride_adaptive, CompressedState, ErrorBoundLadder, RatioThreshold, RunMetrics,
    Simulator, StrideCompressReport,
};
pub use checkpoint::{checkpoint_load, checkpoint_load_for, checkpoint_save, Checkpoint};
pub use circuit::{build_grover, build_qft, build_random, parse_circuit, CircuitProgram};
pub use error::{Error, Result};
pub use experiment::{bench, compare, simulate, RunConfig};
pub use gate::{GateOp, Unitary2x2};
pub use metrics::{GateRecord, RunSummary};
pub use reference::{fidelity, run_dense, DenseState};
pub use state::{qubit_gain, raw_bytes, Amplitude, StateGeometry, StrideBuffer};
