use thiserror::Error;

use crate::circuit::ParseError;
use crate::codec::CodecError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit {qubit} out of range for {n_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("basis index {index} out of range for {n_qubits}-qubit state")]
    IndexOutOfRange { index: usize, n_qubits: usize },

    #[error("qubit count {0} outside supported range")]
    QubitCount(usize),

    #[error("stride bits {stride_bits} exceed qubit count {n_qubits}")]
    StrideBits { stride_bits: usize, n_qubits: usize },

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("control and target are both qubit {0}")]
    ControlIsTarget(usize),

    #[error("target qubit {target} is {relation} stride bits {stride_bits}")]
    StrideLocality {
        target: usize,
        stride_bits: usize,
        relation: &'static str,
    },

    #[error("stride {lo} cannot pair with stride {hi} for qubit {target}")]
    StridePairing { lo: usize, hi: usize, target: usize },

    #[error("non-finite value encountered")]
    NonFinite,

    #[error("compression ratio {0} below 1")]
    RatioBelowOne(f64),

    #[error("invalid error-bound ladder: {0}")]
    Ladder(String),

    #[error("invalid ratio threshold {0}")]
    Threshold(f64),

    #[error("program has {program} qubits but state has {state}")]
    QubitMismatch { program: usize, state: usize },

    #[error("state norm collapsed to zero")]
    ZeroNorm,

    #[error("gate {index} failed: {source}")]
    Gate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{n_qubits} qubits exceed the dense simulation limit of {limit}")]
    DenseLimit { n_qubits: usize, limit: usize },

    #[error("state length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty record list")]
    EmptyRecords,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("checkpoint geometry mismatch: file has {found}, expected {expected}")]
    GeometryMismatch { found: String, expected: String },

    #[error(transparent)]
    Codec(#[from] CodecError),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("worker pool: {0}")]
    Pool(String),
}
