//! Zero-run coding over 8-byte words.
//!
//! The payload is a sequence of tokens, each introduced by a varint
//! `len << 1 | kind`:
//! - kind 0: `len` words whose bit pattern is all zero (`+0.0`);
//! - kind 1: `len` literal words follow as raw little-endian bytes.

use super::block::{CodecId, CompressedBlock};
use super::varint::{read_uvarint, write_uvarint};
use super::{check_finite, CodecError};

const ZERO_RUN: u64 = 0;
const LITERAL_RUN: u64 = 1;

pub fn compress_lossless(scalars: &[f64]) -> Result<CompressedBlock, CodecError> {
    check_finite(scalars)?;
    let mut payload = Vec::new();
    let mut i = 0;
    while i < scalars.len() {
        let zero = scalars[i].to_bits() == 0;
        let run = scalars[i..]
            .iter()
            .take_while(|x| (x.to_bits() == 0) == zero)
            .count();
        if zero {
            write_uvarint((run as u64) << 1 | ZERO_RUN, &mut payload);
        } else {
            write_uvarint((run as u64) << 1 | LITERAL_RUN, &mut payload);
            for x in &scalars[i..i + run] {
                payload.extend_from_slice(&x.to_le_bytes());
            }
        }
        i += run;
    }
    Ok(CompressedBlock {
        codec: CodecId::LosslessSparse,
        delta: 0.0,
        scalar_count: scalars.len() as u64,
        payload,
    })
}

pub(super) fn decode(payload: &[u8], count: usize) -> Result<Vec<f64>, CodecError> {
    let mut out = Vec::with_capacity(count.min(payload.len().saturating_mul(64)));
    let mut pos = 0;
    while pos < payload.len() {
        let token = read_uvarint(payload, &mut pos)?;
        let run = usize::try_from(token >> 1).map_err(|_| CodecError::Corrupt("run length"))?;
        if run == 0 || run > count - out.len() {
            return Err(CodecError::Corrupt("run length"));
        }
        if token & 1 == ZERO_RUN {
            out.resize(out.len() + run, 0.0);
        } else {
            let end = pos
                .checked_add(run * 8)
                .filter(|&e| e <= payload.len())
                .ok_or(CodecError::Truncated)?;
            out.extend(
                payload[pos..end]
                    .chunks_exact(8)
                    .map(|w| f64::from_le_bytes(w.try_into().unwrap())),
            );
            pos = end;
        }
    }
    if out.len() != count {
        return Err(CodecError::Truncated);
    }
    Ok(out)
}
