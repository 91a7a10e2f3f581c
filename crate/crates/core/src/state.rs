//! Amplitudes, index conventions and stride geometry.
//!
//! Qubit `k` is bit `k` of the amplitude index, so qubit 0 is the
//! least-significant bit. A state of `n` qubits is cut into `2^(n - s)`
//! contiguous strides of `2^s` amplitudes each.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One state coefficient: two IEEE-754 doubles.
pub type Amplitude = Complex64;

/// Bytes occupied by one uncompressed amplitude.
pub const AMPLITUDE_BYTES: usize = 16;

/// Largest qubit count accepted by the size calculators.
pub const MAX_QUBITS: usize = 62;

/// Default upper limit on stride width (2^20 amplitudes, 16 MiB buffers).
pub const DEFAULT_MAX_STRIDE_BITS: usize = 20;

/// Magnitudes below this are flushed to exact zero before compression.
pub const FLUSH_TO_ZERO: f64 = 1e-300;

/// Value of `qubit`'s bit in `amp_index` for an `n_qubits` state.
pub fn indexing_convention(qubit: usize, amp_index: usize, n_qubits: usize) -> Result<u8> {
    if qubit >= n_qubits {
        return Err(Error::QubitOutOfRange { qubit, n_qubits });
    }
    if n_qubits < usize::BITS as usize && amp_index >> n_qubits != 0 {
        return Err(Error::IndexOutOfRange {
            index: amp_index,
            n_qubits,
        });
    }
    Ok(bit(amp_index, qubit) as u8)
}

#[inline]
pub(crate) fn bit(index: usize, qubit: usize) -> bool {
    (index >> qubit) & 1 == 1
}

/// Size in bytes of the uncompressed state vector, `2^(n+4)`.
pub fn raw_bytes(n_qubits: usize) -> Result<u128> {
    if !(1..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::QubitCount(n_qubits));
    }
    Ok(1u128 << (n_qubits + 4))
}

/// Extra qubits that fit in the same memory at a given compression ratio.
pub fn qubit_gain(min_ratio: f64) -> Result<u32> {
    if !min_ratio.is_finite() || min_ratio < 1.0 {
        return Err(Error::RatioBelowOne(min_ratio));
    }
    Ok(floor_log2(min_ratio) as u32)
}

/// `floor(log2(x))` for positive finite `x`, exact at powers of two.
pub(crate) fn floor_log2(x: f64) -> i32 {
    debug_assert!(x > 0.0 && x.is_finite());
    let mut e = x.log2().floor() as i32;
    // log2 can land one ulp on the wrong side of an integer.
    if 2f64.powi(e) > x {
        e -= 1;
    } else if 2f64.powi(e + 1) <= x {
        e += 1;
    }
    e
}

/// Partitioning of a state vector into equally sized strides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateGeometry {
    n_qubits: usize,
    stride_bits: usize,
}

impl StateGeometry {
    pub fn new(n_qubits: usize, stride_bits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::QubitCount(n_qubits));
        }
        if stride_bits > n_qubits {
            return Err(Error::StrideBits {
                stride_bits,
                n_qubits,
            });
        }
        Ok(Self {
            n_qubits,
            stride_bits,
        })
    }

    /// Geometry with the default stride width `min(n, 20)`.
    pub fn with_default_stride(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, n_qubits.min(DEFAULT_MAX_STRIDE_BITS))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn stride_bits(&self) -> usize {
        self.stride_bits
    }

    pub fn n_amplitudes(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn stride_len(&self) -> usize {
        1 << self.stride_bits
    }

    pub fn n_strides(&self) -> usize {
        1 << (self.n_qubits - self.stride_bits)
    }

    pub fn raw_bytes(&self) -> u128 {
        1u128 << (self.n_qubits + 4)
    }

    pub fn stride_raw_bytes(&self) -> usize {
        AMPLITUDE_BYTES << self.stride_bits
    }

    /// Stride holding `amp_index` and the offset inside it.
    pub fn locate(&self, amp_index: usize) -> (usize, usize) {
        (
            amp_index >> self.stride_bits,
            amp_index & (self.stride_len() - 1),
        )
    }

    pub fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.n_amplitudes() {
            return Err(Error::IndexOutOfRange {
                index,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for StateGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} qubits / {} stride bits",
            self.n_qubits, self.stride_bits
        )
    }
}

/// Decompressed working copy of one stride.
#[derive(Debug, Clone, PartialEq)]
pub struct StrideBuffer {
    pub stride_index: usize,
    pub amplitudes: Vec<Amplitude>,
}

impl StrideBuffer {
    pub fn new(stride_index: usize, amplitudes: Vec<Amplitude>) -> Self {
        Self {
            stride_index,
            amplitudes,
        }
    }

    pub fn zeros(stride_index: usize, len: usize) -> Self {
        Self::new(stride_index, vec![Amplitude::new(0.0, 0.0); len])
    }

    /// Global index of the first amplitude.
    pub fn base_index(&self) -> usize {
        self.stride_index * self.amplitudes.len()
    }

    pub fn sum_sq(&self) -> f64 {
        sum_sq(&self.amplitudes)
    }

    pub fn scale(&mut self, factor: f64) {
        if factor != 1.0 {
            for a in &mut self.amplitudes {
                *a *= factor;
            }
        }
    }

    /// Split into real and imaginary planes.
    pub fn planes(&self) -> (Vec<f64>, Vec<f64>) {
        self.amplitudes.iter().map(|a| (a.re, a.im)).unzip()
    }

    pub fn from_planes(stride_index: usize, re: &[f64], im: &[f64]) -> Self {
        debug_assert_eq!(re.len(), im.len());
        let amplitudes = re
            .iter()
            .zip(im)
            .map(|(&re, &im)| Amplitude::new(re, im))
            .collect();
        Self::new(stride_index, amplitudes)
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes
            .iter()
            .all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn flush_denormals(&mut self) {
        for a in &mut self.amplitudes {
            if a.re.abs() < FLUSH_TO_ZERO {
                a.re = 0.0;
            }
            if a.im.abs() < FLUSH_TO_ZERO {
                a.im = 0.0;
            }
        }
    }
}

pub(crate) fn sum_sq(amplitudes: &[Amplitude]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

/// Running `Σ|α|²` over one full pass of the state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormAccumulator {
    sum_sq: f64,
}

impl NormAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sum_sq(sum_sq: f64) -> Self {
        Self { sum_sq }
    }

    pub fn add(&mut self, contribution: f64) {
        self.sum_sq += contribution;
    }

    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    /// Factor that brings the accumulated state back to unit norm.
    pub fn normalization_factor(&self) -> Result<f64> {
        if !self.sum_sq.is_finite() || self.sum_sq <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(1.0 / self.sum_sq.sqrt())
    }
}
