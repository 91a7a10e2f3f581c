//! Dense, uncompressed reference simulator and state fidelity.

use num_complex::Complex64;

use crate::circuit::CircuitProgram;
use crate::error::{Error, Result};
use crate::gate::GateOp;
use crate::state::Amplitude;

/// Default largest state the dense simulator will allocate.
pub const DEFAULT_DENSE_LIMIT: usize = 26;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub n_qubits: usize,
    pub amplitudes: Vec<Amplitude>,
}

impl DenseState {
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits >= usize::BITS as usize - 1 {
            return Err(Error::QubitCount(n_qubits));
        }
        let len = 1usize << n_qubits;
        if index >= len {
            return Err(Error::IndexOutOfRange { index, n_qubits });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); len];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let amps = &mut self.amplitudes;
        match *gate {
            GateOp::PhaseFlip { index } => amps[index] = -amps[index],
            GateOp::Single { target, .. } | GateOp::Controlled { target, .. } => {
                let m = gate.unitary().expect("pair gate").entries();
                let control_mask = gate.control().map_or(0, |c| 1usize << c);
                let t = 1usize << target;
                for i in 0..amps.len() {
                    if i & t != 0 || i & control_mask != control_mask {
                        continue;
                    }
                    let (a, b) = (amps[i], amps[i | t]);
                    amps[i] = m[0][0] * a + m[0][1] * b;
                    amps[i | t] = m[1][0] * a + m[1][1] * b;
                }
            }
        }
        Ok(())
    }
}

/// Runs `program` from basis state `init` without compression.
pub fn run_dense_from(program: &CircuitProgram, init: usize, limit: usize) -> Result<DenseState> {
    if program.n_qubits > limit {
        return Err(Error::DenseLimit {
            n_qubits: program.n_qubits,
            limit,
        });
    }
    let mut state = DenseState::basis(program.n_qubits, init)?;
    for (index, g) in program.gates.iter().enumerate() {
        state.apply(g).map_err(|e| Error::Gate {
            index,
            source: Box::new(e),
        })?;
    }
    Ok(state)
}

/// Runs `program` from `|0…0⟩` under the default size guard.
pub fn run_dense(program: &CircuitProgram) -> Result<DenseState> {
    run_dense_from(program, 0, DEFAULT_DENSE_LIMIT)
}

/// `|⟨a|b⟩|` after normalizing both inputs. A zero vector has no overlap
/// with anything and scores 0.
pub fn fidelity(a: &[Amplitude], b: &[Amplitude]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let overlap: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    Ok((overlap.norm() / (na.sqrt() * nb.sqrt())).min(1.0))
}

pub fn state_fidelity(a: &DenseState, b: &DenseState) -> Result<f64> {
    fidelity(&a.amplitudes, &b.amplitudes)
}
