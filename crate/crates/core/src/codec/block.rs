//! Self-describing compressed block container.
//!
//! Layout (little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "QCS1"
//! 4       1     codec id (0 = lossless sparse, 1 = lossy predictive)
//! 5       8     error bound delta (f64)
//! 13      8     scalar count (u64)
//! 21      8     payload length (u64)
//! 29      ...   payload
//! ```

use super::CodecError;

pub const MAGIC: [u8; 4] = *b"QCS1";
pub const HEADER_LEN: usize = 29;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum CodecId {
    LosslessSparse = 0,
    LossyPredictive = 1,
}

impl TryFrom<u8> for CodecId {
    type Error = CodecError;

    fn try_from(v: u8) -> Result<Self, CodecError> {
        match v {
            0 => Ok(Self::LosslessSparse),
            1 => Ok(Self::LossyPredictive),
            other => Err(CodecError::UnknownCodec(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedBlock {
    pub codec: CodecId,
    pub delta: f64,
    pub scalar_count: u64,
    pub payload: Vec<u8>,
}

impl CompressedBlock {
    /// Total encoded size, header included.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    /// `8 * scalar_count / encoded_len`.
    pub fn ratio(&self) -> f64 {
        (8 * self.scalar_count) as f64 / self.encoded_len() as f64
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.reserve(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.push(self.codec as u8);
        out.extend_from_slice(&self.delta.to_le_bytes());
        out.extend_from_slice(&self.scalar_count.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.payload);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_to(&mut out);
        out
    }

    /// Parses one block from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn read_from(bytes: &[u8]) -> Result<(Self, usize), CodecError> {
        if bytes.len() < 4 {
            return Err(CodecError::Truncated);
        }
        if bytes[..4] != MAGIC {
            return Err(CodecError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(CodecError::Truncated);
        }
        let codec = CodecId::try_from(bytes[4])?;
        let delta = f64::from_le_bytes(bytes[5..13].try_into().unwrap());
        let scalar_count = u64::from_le_bytes(bytes[13..21].try_into().unwrap());
        let payload_len = u64::from_le_bytes(bytes[21..29].try_into().unwrap());
        let end = usize::try_from(payload_len)
            .ok()
            .and_then(|n| n.checked_add(HEADER_LEN))
            .ok_or(CodecError::Truncated)?;
        if bytes.len() < end {
            return Err(CodecError::Truncated);
        }
        let block = Self {
            codec,
            delta,
            scalar_count,
            payload: bytes[HEADER_LEN..end].to_vec(),
        };
        Ok((block, end))
    }

    /// Parses exactly one block; trailing bytes are an error.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let (block, used) = Self::read_from(bytes)?;
        if used != bytes.len() {
            return Err(CodecError::Corrupt("trailing bytes after block"));
        }
        Ok(block)
    }
}
