//! Pairwise gate application on decompressed stride buffers.
//!
//! A single-qubit gate on qubit `t` mixes amplitude pairs whose indices
//! differ only in bit `t`. When `t < stride_bits` both members of every
//! pair live in the same stride; otherwise the pair spans two strides
//! `2^(t - stride_bits)` apart and both buffers must be resident.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{bit, Amplitude, StateGeometry, StrideBuffer};

const UNITARITY_TOL: f64 = 1e-12;

/// A 2x2 unitary matrix `[[u11, u12], [u21, u22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2x2 {
    m: [[Amplitude; 2]; 2],
}

impl Unitary2x2 {
    /// Checks `U†U = I` elementwise within 1e-12.
    pub fn new(u11: Amplitude, u12: Amplitude, u21: Amplitude, u22: Amplitude) -> Result<Self> {
        let u = Self {
            m: [[u11, u12], [u21, u22]],
        };
        if !u
            .m
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let dev = u.unitarity_deviation();
        if dev > UNITARITY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(u)
    }

    const fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self {
            m: [
                [Complex64::new(a, 0.0), Complex64::new(b, 0.0)],
                [Complex64::new(c, 0.0), Complex64::new(d, 0.0)],
            ],
        }
    }

    fn diagonal(phase: Amplitude) -> Self {
        Self {
            m: [
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), phase],
            ],
        }
    }

    pub fn identity() -> Self {
        Self::from_real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn hadamard() -> Self {
        Self::from_real(FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
    }

    pub fn pauli_x() -> Self {
        Self::from_real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn pauli_y() -> Self {
        Self {
            m: [
                [Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0)],
                [Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)],
            ],
        }
    }

    pub fn pauli_z() -> Self {
        Self::from_real(1.0, 0.0, 0.0, -1.0)
    }

    pub fn s() -> Self {
        Self::diagonal(Complex64::new(0.0, 1.0))
    }

    pub fn t() -> Self {
        Self::diagonal(Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2))
    }

    /// `diag(1, e^{iθ})`.
    pub fn phase(theta: f64) -> Self {
        Self::diagonal(Complex64::from_polar(1.0, theta))
    }

    pub fn entries(&self) -> [[Amplitude; 2]; 2] {
        self.m
    }

    /// Largest elementwise deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let m = &self.m;
        let mut dev: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let z = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
                let expect = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((z - expect).norm());
            }
        }
        dev
    }

    #[inline(always)]
    fn apply(&self, a0: &mut Amplitude, a1: &mut Amplitude) {
        let (x, y) = (*a0, *a1);
        *a0 = self.m[0][0] * x + self.m[0][1] * y;
        *a1 = self.m[1][0] * x + self.m[1][1] * y;
    }
}

/// Named single-qubit gates of the circuit alphabet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingleGate {
    H,
    X,
    Y,
    Z,
    S,
    T,
    U(Unitary2x2),
}

impl SingleGate {
    pub fn unitary(&self) -> Unitary2x2 {
        match self {
            Self::H => Unitary2x2::hadamard(),
            Self::X => Unitary2x2::pauli_x(),
            Self::Y => Unitary2x2::pauli_y(),
            Self::Z => Unitary2x2::pauli_z(),
            Self::S => Unitary2x2::s(),
            Self::T => Unitary2x2::t(),
            Self::U(u) => *u,
        }
    }

    pub fn mnemonic(&self) -> &'static str {
        match self {
            Self::H => "h",
            Self::X => "x",
            Self::Y => "y",
            Self::Z => "z",
            Self::S => "s",
            Self::T => "t",
            Self::U(_) => "u",
        }
    }
}

/// Named two-qubit controlled gates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlledGate {
    Cx,
    Cz,
    /// Controlled phase `diag(1, e^{iθ})` on the target.
    Cp(f64),
    /// Arbitrary controlled unitary; has no text mnemonic.
    Cu(Unitary2x2),
}

impl ControlledGate {
    pub fn unitary(&self) -> Unitary2x2 {
        match self {
            Self::Cx => Unitary2x2::pauli_x(),
            Self::Cz => Unitary2x2::pauli_z(),
            Self::Cp(theta) => Unitary2x2::phase(*theta),
            Self::Cu(u) => *u,
        }
    }

    pub fn mnemonic(&self) -> &'static str {
        match self {
            Self::Cx => "cx",
            Self::Cz => "cz",
            Self::Cp(_) => "cp",
            Self::Cu(_) => "cu",
        }
    }
}

/// One instruction of a circuit program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    Single {
        gate: SingleGate,
        target: usize,
    },
    Controlled {
        gate: ControlledGate,
        control: usize,
        target: usize,
    },
    /// Multiplies the amplitude of one basis state by -1.
    PhaseFlip {
        index: usize,
    },
}

impl GateOp {
    pub fn single(gate: SingleGate, target: usize) -> Self {
        Self::Single { gate, target }
    }

    pub fn controlled(gate: ControlledGate, control: usize, target: usize) -> Result<Self> {
        if control == target {
            return Err(Error::ControlIsTarget(control));
        }
        Ok(Self::Controlled {
            gate,
            control,
            target,
        })
    }

    pub fn h(q: usize) -> Self {
        Self::single(SingleGate::H, q)
    }

    pub fn x(q: usize) -> Self {
        Self::single(SingleGate::X, q)
    }

    pub fn cx(control: usize, target: usize) -> Result<Self> {
        Self::controlled(ControlledGate::Cx, control, target)
    }

    pub fn cp(control: usize, target: usize, theta: f64) -> Result<Self> {
        Self::controlled(ControlledGate::Cp(theta), control, target)
    }

    pub fn flip(index: usize) -> Self {
        Self::PhaseFlip { index }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Single { gate, .. } => gate.mnemonic(),
            Self::Controlled { gate, .. } => gate.mnemonic(),
            Self::PhaseFlip { .. } => "flip",
        }
    }

    pub fn unitary(&self) -> Option<Unitary2x2> {
        match self {
            Self::Single { gate, .. } => Some(gate.unitary()),
            Self::Controlled { gate, .. } => Some(gate.unitary()),
            Self::PhaseFlip { .. } => None,
        }
    }

    pub fn target(&self) -> Option<usize> {
        match self {
            Self::Single { target, .. } | Self::Controlled { target, .. } => Some(*target),
            Self::PhaseFlip { .. } => None,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match self {
            Self::Controlled { control, .. } => Some(*control),
            _ => None,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let in_range = |q: usize| {
            if q < n_qubits {
                Ok(())
            } else {
                Err(Error::QubitOutOfRange { qubit: q, n_qubits })
            }
        };
        match *self {
            Self::Single { target, .. } => in_range(target),
            Self::Controlled {
                control, target, ..
            } => {
                in_range(control)?;
                in_range(target)?;
                if control == target {
                    return Err(Error::ControlIsTarget(control));
                }
                Ok(())
            }
            Self::PhaseFlip { index } => {
                if n_qubits < usize::BITS as usize && index >> n_qubits == 0 {
                    Ok(())
                } else {
                    Err(Error::IndexOutOfRange { index, n_qubits })
                }
            }
        }
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Single {
                gate: SingleGate::U(u),
                target,
            } => {
                write!(f, "u {target}")?;
                for z in u.entries().iter().flatten() {
                    write!(f, " {:?} {:?}", z.re, z.im)?;
                }
                Ok(())
            }
            Self::Single { gate, target } => write!(f, "{} {target}", gate.mnemonic()),
            Self::Controlled {
                gate: ControlledGate::Cp(theta),
                control,
                target,
            } => write!(f, "cp {control} {target} {theta:?}"),
            Self::Controlled {
                gate: ControlledGate::Cu(u),
                control,
                target,
            } => {
                write!(f, "cu {control} {target}")?;
                for z in u.entries().iter().flatten() {
                    write!(f, " {:?} {:?}", z.re, z.im)?;
                }
                Ok(())
            }
            Self::Controlled {
                gate,
                control,
                target,
            } => write!(f, "{} {control} {target}", gate.mnemonic()),
            Self::PhaseFlip { index } => write!(f, "flip {index}"),
        }
    }
}

/// Whether pairs of `target` fall inside one stride.
pub fn is_local(target: usize, stride_bits: usize) -> bool {
    target < stride_bits
}

/// Partner stride of `stride_index` for a cross-stride `target`, or `None`
/// when `stride_index` is itself the upper member of its pair.
pub fn partner_stride(stride_index: usize, target: usize, stride_bits: usize) -> Option<usize> {
    debug_assert!(target >= stride_bits);
    let b = target - stride_bits;
    if bit(stride_index, b) {
        None
    } else {
        Some(stride_index | (1 << b))
    }
}

/// Whether any index in the stride has `control` set. Always true for
/// controls inside the stride.
pub fn stride_fires(stride_index: usize, control: usize, stride_bits: usize) -> bool {
    control < stride_bits || bit(stride_index, control - stride_bits)
}

fn check_local(target: usize, stride_bits: usize) -> Result<()> {
    if target >= stride_bits {
        return Err(Error::StrideLocality {
            target,
            stride_bits,
            relation: "not below",
        });
    }
    Ok(())
}

fn check_pair(
    lo: &StrideBuffer,
    hi: &StrideBuffer,
    target: usize,
    stride_bits: usize,
) -> Result<()> {
    if target < stride_bits {
        return Err(Error::StrideLocality {
            target,
            stride_bits,
            relation: "below",
        });
    }
    let ok = lo.amplitudes.len() == hi.amplitudes.len()
        && partner_stride(lo.stride_index, target, stride_bits) == Some(hi.stride_index);
    if !ok {
        return Err(Error::StridePairing {
            lo: lo.stride_index,
            hi: hi.stride_index,
            target,
        });
    }
    Ok(())
}

fn check_control(control: usize, target: usize) -> Result<()> {
    if control == target {
        Err(Error::ControlIsTarget(control))
    } else {
        Ok(())
    }
}

/// Applies `u` to `target` where the pair partner lies in the same buffer.
pub fn apply_single_in_stride(
    buf: &mut StrideBuffer,
    u: &Unitary2x2,
    target: usize,
    stride_bits: usize,
) -> Result<()> {
    check_local(target, stride_bits)?;
    let half = 1 << target;
    for block in buf.amplitudes.chunks_exact_mut(half << 1) {
        let (lo, hi) = block.split_at_mut(half);
        for (a0, a1) in lo.iter_mut().zip(hi) {
            u.apply(a0, a1);
        }
    }
    Ok(())
}

/// Applies `u` to `target` across the stride pair `(lo, hi)`.
pub fn apply_single_cross_stride(
    lo: &mut StrideBuffer,
    hi: &mut StrideBuffer,
    u: &Unitary2x2,
    target: usize,
    stride_bits: usize,
) -> Result<()> {
    check_pair(lo, hi, target, stride_bits)?;
    for (a0, a1) in lo.amplitudes.iter_mut().zip(&mut hi.amplitudes) {
        u.apply(a0, a1);
    }
    Ok(())
}

/// Controlled `u` with the target inside the buffer. The control bit is
/// read from the global index, so it may lie inside or outside the stride.
pub fn apply_controlled_in_stride(
    buf: &mut StrideBuffer,
    u: &Unitary2x2,
    control: usize,
    target: usize,
    stride_bits: usize,
) -> Result<()> {
    check_control(control, target)?;
    check_local(target, stride_bits)?;
    if control >= stride_bits {
        if stride_fires(buf.stride_index, control, stride_bits) {
            apply_single_in_stride(buf, u, target, stride_bits)?;
        }
        return Ok(());
    }
    let half = 1 << target;
    for (block_idx, block) in buf.amplitudes.chunks_exact_mut(half << 1).enumerate() {
        let block_base = block_idx * (half << 1);
        let (lo, hi) = block.split_at_mut(half);
        for (i, (a0, a1)) in lo.iter_mut().zip(hi).enumerate() {
            if bit(block_base + i, control) {
                u.apply(a0, a1);
            }
        }
    }
    Ok(())
}

/// Controlled `u` with the target spanning the stride pair `(lo, hi)`.
pub fn apply_controlled_cross_stride(
    lo: &mut StrideBuffer,
    hi: &mut StrideBuffer,
    u: &Unitary2x2,
    control: usize,
    target: usize,
    stride_bits: usize,
) -> Result<()> {
    check_control(control, target)?;
    check_pair(lo, hi, target, stride_bits)?;
    if control >= stride_bits {
        if stride_fires(lo.stride_index, control, stride_bits) {
            apply_single_cross_stride(lo, hi, u, target, stride_bits)?;
        }
        return Ok(());
    }
    for (i, (a0, a1)) in lo.amplitudes.iter_mut().zip(&mut hi.amplitudes).enumerate() {
        if bit(i, control) {
            u.apply(a0, a1);
        }
    }
    Ok(())
}

/// Negates the amplitude at global `flip_index` if this buffer holds it.
/// Returns whether the buffer was touched.
pub fn apply_diag_phase_flip(
    buf: &mut StrideBuffer,
    flip_index: usize,
    geometry: &StateGeometry,
) -> Result<bool> {
    geometry.check_index(flip_index)?;
    let (stride, offset) = geometry.locate(flip_index);
    if stride != buf.stride_index {
        return Ok(false);
    }
    let a = &mut buf.amplitudes[offset];
    *a = -*a;
    Ok(true)
}

/// Convenience: QFT controlled-phase angle `π / 2^m`.
pub fn qft_angle(m: usize) -> f64 {
    PI / 2f64.powi(m as i32)
}
