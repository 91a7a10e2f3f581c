//! Binary checkpoints of a [`CompressedState`].
//!
//! Blocks are stored verbatim, so a reload decompresses to exactly the
//! same amplitudes. Layout (little-endian):
//!
//! ```text
//! magic "QCKP" | version u8 | n_qubits u32 | stride_bits u32
//! ladder fingerprint u64 | pending_scale f64 | norm sum_sq f64
//! gates_applied u64 | n_strides u64
//! per stride: scale f64 | sum_sq f64 | chosen_delta f64 | re block | im block
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::aalc::{CompressedState, StoredStride};
use crate::codec::{CodecError, CompressedBlock};
use crate::error::{Error, Result};
use crate::state::{NormAccumulator, StateGeometry};

pub const MAGIC: [u8; 4] = *b"QCKP";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: CompressedState,
    pub ladder_fingerprint: u64,
}

pub fn encode(state: &CompressedState, ladder_fingerprint: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + state.compressed_bytes() + 24 * state.strides.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(state.geometry.n_qubits() as u32).to_le_bytes());
    out.extend_from_slice(&(state.geometry.stride_bits() as u32).to_le_bytes());
    out.extend_from_slice(&ladder_fingerprint.to_le_bytes());
    out.extend_from_slice(&state.pending_scale.to_le_bytes());
    out.extend_from_slice(&state.norm.sum_sq().to_le_bytes());
    out.extend_from_slice(&state.gates_applied.to_le_bytes());
    out.extend_from_slice(&(state.strides.len() as u64).to_le_bytes());
    for s in &state.strides {
        out.extend_from_slice(&s.scale.to_le_bytes());
        out.extend_from_slice(&s.sum_sq.to_le_bytes());
        out.extend_from_slice(&s.chosen_delta.to_le_bytes());
        s.re.write_to(&mut out);
        s.im.write_to(&mut out);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn block(&mut self) -> Result<CompressedBlock> {
        match CompressedBlock::read_from(&self.bytes[self.pos..]) {
            Ok((block, used)) => {
                self.pos += used;
                Ok(block)
            }
            Err(CodecError::Truncated) => Err(Error::Checkpoint("truncated file".into())),
            Err(e) => Err(e.into()),
        }
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)
        .map_err(|_| Error::Checkpoint("truncated file".into()))?
        != MAGIC
    {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let n_qubits = r.u32()? as usize;
    let stride_bits = r.u32()? as usize;
    let geometry = StateGeometry::new(n_qubits, stride_bits)
        .map_err(|e| Error::Checkpoint(format!("invalid geometry: {e}")))?;
    let ladder_fingerprint = r.u64()?;
    let pending_scale = r.f64()?;
    let norm = NormAccumulator::from_sum_sq(r.f64()?);
    let gates_applied = r.u64()?;
    let n_strides = r.u64()?;
    if n_strides != geometry.n_strides() as u64 {
        return Err(Error::Checkpoint(format!(
            "{n_strides} strides recorded, geometry implies {}",
            geometry.n_strides()
        )));
    }
    let mut strides = Vec::with_capacity(geometry.n_strides());
    for j in 0..geometry.n_strides() {
        let scale = r.f64()?;
        let sum_sq = r.f64()?;
        let chosen_delta = r.f64()?;
        let re = r.block()?;
        let im = r.block()?;
        let len = geometry.stride_len() as u64;
        if re.scalar_count != len || im.scalar_count != len {
            return Err(Error::Checkpoint(format!("stride {j} has wrong length")));
        }
        strides.push(StoredStride {
            re,
            im,
            scale,
            sum_sq,
            chosen_delta,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok(Checkpoint {
        state: CompressedState {
            geometry,
            strides,
            norm,
            pending_scale,
            gates_applied,
        },
        ladder_fingerprint,
    })
}

pub fn checkpoint_save(
    state: &CompressedState,
    ladder_fingerprint: u64,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(state, ladder_fingerprint))?;
    f.sync_all()?;
    Ok(())
}

pub fn checkpoint_load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    decode(&fs::read(path)?)
}

/// Loads and checks that the file matches the expected geometry.
pub fn checkpoint_load_for(path: impl AsRef<Path>, expected: &StateGeometry) -> Result<Checkpoint> {
    let ckpt = checkpoint_load(path)?;
    if ckpt.state.geometry != *expected {
        return Err(Error::GeometryMismatch {
            found: ckpt.state.geometry.to_string(),
            expected: expected.to_string(),
        });
    }
    Ok(ckpt)
}
