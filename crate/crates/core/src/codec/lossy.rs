//! Error-bounded predictive quantization.
//!
//! Each scalar is predicted by the previous *reconstructed* scalar (0 for
//! the first). The residual is quantized into bins of width `2δ`:
//! `q = round((x - pred) / 2δ)`, reconstructed as `pred + 2δ·q`. Codes
//! with `|q| >= 2^15`, or whose reconstruction misses `x` by more than `δ`
//! after rounding, are escaped and stored verbatim.
//!
//! Token stream, each token a varint `value << 2 | tag`:
//! - tag 0: run of `value` zero codes;
//! - tag 1: one nonzero code, `value = zigzag(q)`;
//! - tag 2: escape, followed by the raw 8-byte scalar.

use super::block::{CodecId, CompressedBlock};
use super::varint::{read_uvarint, unzigzag, write_uvarint, zigzag};
use super::{check_finite, CodecError, ErrorBound};

/// Exclusive bound on `|q|`.
pub const MAX_CODE: i64 = 1 << 15;

const TAG_ZERO_RUN: u64 = 0;
const TAG_CODE: u64 = 1;
const TAG_ESCAPE: u64 = 2;

#[inline(always)]
fn reconstruct(pred: f64, bin: f64, q: i64) -> f64 {
    pred + bin * q as f64
}

pub fn compress_lossy(scalars: &[f64], bound: ErrorBound) -> Result<CompressedBlock, CodecError> {
    encode(scalars, bound, None)
}

/// Like [`compress_lossy`], also returning the decoder's output.
pub fn compress_lossy_with_recon(
    scalars: &[f64],
    bound: ErrorBound,
) -> Result<(CompressedBlock, Vec<f64>), CodecError> {
    let mut recon = Vec::with_capacity(scalars.len());
    let block = encode(scalars, bound, Some(&mut recon))?;
    Ok((block, recon))
}

fn encode(
    scalars: &[f64],
    bound: ErrorBound,
    mut recon: Option<&mut Vec<f64>>,
) -> Result<CompressedBlock, CodecError> {
    let delta = bound.delta();
    if delta.is_nan() || delta <= 0.0 {
        return Err(CodecError::InvalidBound(delta));
    }
    check_finite(scalars)?;
    let bin = 2.0 * delta;
    let mut payload = Vec::new();
    let mut zero_run = 0u64;
    let mut pred = 0.0f64;

    let flush = |run: &mut u64, payload: &mut Vec<u8>| {
        if *run > 0 {
            write_uvarint(*run << 2 | TAG_ZERO_RUN, payload);
            *run = 0;
        }
    };

    for &x in scalars {
        let qf = ((x - pred) / bin).round();
        let mut value = None;
        if qf.abs() < MAX_CODE as f64 {
            let q = qf as i64;
            let r = reconstruct(pred, bin, q);
            if (r - x).abs() <= delta {
                value = Some((q, r));
            }
        }
        match value {
            Some((0, r)) => {
                zero_run += 1;
                pred = r;
            }
            Some((q, r)) => {
                flush(&mut zero_run, &mut payload);
                write_uvarint(zigzag(q) << 2 | TAG_CODE, &mut payload);
                pred = r;
            }
            None => {
                flush(&mut zero_run, &mut payload);
                write_uvarint(TAG_ESCAPE, &mut payload);
                payload.extend_from_slice(&x.to_le_bytes());
                pred = x;
            }
        }
        if let Some(out) = recon.as_deref_mut() {
            out.push(pred);
        }
    }
    flush(&mut zero_run, &mut payload);

    Ok(CompressedBlock {
        codec: CodecId::LossyPredictive,
        delta,
        scalar_count: scalars.len() as u64,
        payload,
    })
}

pub(super) fn decode(payload: &[u8], count: usize, delta: f64) -> Result<Vec<f64>, CodecError> {
    let bin = 2.0 * delta;
    let mut out = Vec::with_capacity(count.min(payload.len().saturating_mul(1 << 16)));
    let mut pred = 0.0f64;
    let mut pos = 0;
    while pos < payload.len() {
        let token = read_uvarint(payload, &mut pos)?;
        let value = token >> 2;
        match token & 3 {
            TAG_ZERO_RUN => {
                let run = usize::try_from(value).map_err(|_| CodecError::Corrupt("run length"))?;
                if run == 0 || run > count - out.len() {
                    return Err(CodecError::Corrupt("run length"));
                }
                out.resize(out.len() + run, pred);
            }
            TAG_CODE => {
                let q = unzigzag(value);
                if q == 0 || q.abs() >= MAX_CODE {
                    return Err(CodecError::Corrupt("quantization code"));
                }
                pred = reconstruct(pred, bin, q);
                out.push(pred);
            }
            TAG_ESCAPE => {
                if value != 0 {
                    return Err(CodecError::Corrupt("escape token"));
                }
                let raw = payload.get(pos..pos + 8).ok_or(CodecError::Truncated)?;
                pos += 8;
                pred = f64::from_le_bytes(raw.try_into().unwrap());
                out.push(pred);
            }
            _ => return Err(CodecError::Corrupt("unknown token")),
        }
        if out.len() > count {
            return Err(CodecError::Corrupt("too many scalars"));
        }
    }
    if out.len() != count {
        return Err(CodecError::Truncated);
    }
    Ok(out)
}
