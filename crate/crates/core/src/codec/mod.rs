//! Scalar-stream codecs used to store strides.
//!
//! Two backends share one block container:
//! - a lossless zero-run coder over 8-byte words, bit-exact;
//! - an error-bounded predictive quantizer whose reconstruction never
//!   deviates from the input by more than `delta` per scalar.

mod block;
mod lossless;
mod lossy;
pub mod varint;

use thiserror::Error;

pub use block::{CodecId, CompressedBlock, HEADER_LEN, MAGIC};
pub use lossless::compress_lossless;
pub use lossy::{compress_lossy, compress_lossy_with_recon, MAX_CODE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("bad magic")]
    BadMagic,
    #[error("truncated block")]
    Truncated,
    #[error("unknown codec id {0}")]
    UnknownCodec(u8),
    #[error("corrupt payload: {0}")]
    Corrupt(&'static str),
    #[error("non-finite scalar at position {0}")]
    NonFinite(usize),
    #[error("invalid error bound {0}")]
    InvalidBound(f64),
}

/// Absolute per-scalar error bound. Zero selects lossless coding.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ErrorBound(f64);

impl ErrorBound {
    pub const LOSSLESS: Self = Self(0.0);

    pub fn new(delta: f64) -> Result<Self, CodecError> {
        if delta.is_finite() && delta >= 0.0 {
            Ok(Self(delta))
        } else {
            Err(CodecError::InvalidBound(delta))
        }
    }

    pub fn delta(self) -> f64 {
        self.0
    }

    pub fn is_lossless(self) -> bool {
        self.0 == 0.0
    }
}

pub(crate) fn check_finite(scalars: &[f64]) -> Result<(), CodecError> {
    match scalars.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(CodecError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Compresses with the backend selected by `bound`.
pub fn compress(scalars: &[f64], bound: ErrorBound) -> Result<CompressedBlock, CodecError> {
    if bound.is_lossless() {
        compress_lossless(scalars)
    } else {
        compress_lossy(scalars, bound)
    }
}

/// Compresses and also returns the values a later [`decompress`] yields.
pub fn compress_with_recon(
    scalars: &[f64],
    bound: ErrorBound,
) -> Result<(CompressedBlock, Vec<f64>), CodecError> {
    if bound.is_lossless() {
        Ok((compress_lossless(scalars)?, scalars.to_vec()))
    } else {
        compress_lossy_with_recon(scalars, bound)
    }
}

pub fn decompress(block: &CompressedBlock) -> Result<Vec<f64>, CodecError> {
    let count =
        usize::try_from(block.scalar_count).map_err(|_| CodecError::Corrupt("scalar count"))?;
    match block.codec {
        CodecId::LosslessSparse => lossless::decode(&block.payload, count),
        CodecId::LossyPredictive => {
            if !(block.delta > 0.0 && block.delta.is_finite()) {
                return Err(CodecError::InvalidBound(block.delta));
            }
            lossy::decode(&block.payload, count, block.delta)
        }
    }
}

/// Pluggable compression backend for stride planes.
pub trait Codec: Send + Sync {
    /// Returns the block and its exact reconstruction.
    fn compress(
        &self,
        scalars: &[f64],
        bound: ErrorBound,
    ) -> Result<(CompressedBlock, Vec<f64>), CodecError>;

    fn decompress(&self, block: &CompressedBlock) -> Result<Vec<f64>, CodecError>;
}

/// The built-in zero-run / predictive-quantization pair.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinCodec;

impl Codec for BuiltinCodec {
    fn compress(
        &self,
        scalars: &[f64],
        bound: ErrorBound,
    ) -> Result<(CompressedBlock, Vec<f64>), CodecError> {
        compress_with_recon(scalars, bound)
    }

    fn decompress(&self, block: &CompressedBlock) -> Result<Vec<f64>, CodecError> {
        decompress(block)
    }
}
