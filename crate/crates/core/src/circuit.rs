//! Circuit programs, the line-oriented text format and built-in benchmarks.
//!
//! ```text
//! # comment
//! qubits 3
//! h 0
//! cx 0 1
//! cp 1 2 0.7853981633974483
//! swap 0 2
//! u 1  re11 im11  re12 im12  re21 im21  re22 im22
//! flip 5
//! ```
//!
//! `swap` expands to three `cx` instructions at parse time.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::gate::{qft_angle, ControlledGate, GateOp, SingleGate, Unitary2x2};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("missing `qubits` header")]
    MissingHeader,
    #[error("duplicate `qubits` header")]
    DuplicateHeader,
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("`{mnemonic}` takes {expected} operands, got {found}")]
    Arity {
        mnemonic: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid number `{0}`")]
    Number(String),
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("basis index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },
    #[error("control equals target ({0})")]
    ControlIsTarget(usize),
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("qubit count must be between 1 and 62")]
    QubitCount,
}

/// Qubit count plus gates in execution order.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitProgram {
    pub name: String,
    pub n_qubits: usize,
    pub gates: Vec<GateOp>,
}

impl CircuitProgram {
    pub fn new(name: impl Into<String>, n_qubits: usize) -> Self {
        Self {
            name: name.into(),
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Three CNOTs exchanging qubits `a` and `b`.
    pub fn push_swap(&mut self, a: usize, b: usize) -> Result<()> {
        self.push(GateOp::cx(a, b)?)?;
        self.push(GateOp::cx(b, a)?)?;
        self.push(GateOp::cx(a, b)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=crate::state::MAX_QUBITS).contains(&self.n_qubits) {
            return Err(Error::QubitCount(self.n_qubits));
        }
        self.gates.iter().enumerate().try_for_each(|(index, g)| {
            g.validate(self.n_qubits).map_err(|e| Error::Gate {
                index,
                source: Box::new(e),
            })
        })
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

impl fmt::Display for CircuitProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.name.is_empty() {
            writeln!(f, "# {}", self.name)?;
        }
        writeln!(f, "qubits {}", self.n_qubits)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

struct LineParser<'a> {
    line: usize,
    mnemonic: &'a str,
    args: Vec<&'a str>,
    n_qubits: usize,
}

impl LineParser<'_> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            kind,
        }
    }

    fn arity(&self, expected: usize) -> Result<(), ParseError> {
        if self.args.len() != expected {
            return Err(self.err(ParseErrorKind::Arity {
                mnemonic: self.mnemonic.to_string(),
                expected,
                found: self.args.len(),
            }));
        }
        Ok(())
    }

    fn uint(&self, i: usize) -> Result<usize, ParseError> {
        self.args[i]
            .parse()
            .map_err(|_| self.err(ParseErrorKind::Number(self.args[i].to_string())))
    }

    fn real(&self, i: usize) -> Result<f64, ParseError> {
        self.args[i]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(ParseErrorKind::Number(self.args[i].to_string())))
    }

    fn qubit(&self, i: usize) -> Result<usize, ParseError> {
        let qubit = self.uint(i)?;
        if qubit >= self.n_qubits {
            return Err(self.err(ParseErrorKind::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            }));
        }
        Ok(qubit)
    }

    fn pair(&self) -> Result<(usize, usize), ParseError> {
        let (c, t) = (self.qubit(0)?, self.qubit(1)?);
        if c == t {
            return Err(self.err(ParseErrorKind::ControlIsTarget(c)));
        }
        Ok((c, t))
    }

    fn matrix(&self, from: usize) -> Result<Unitary2x2, ParseError> {
        let mut z = [Complex64::new(0.0, 0.0); 4];
        for (k, slot) in z.iter_mut().enumerate() {
            *slot = Complex64::new(self.real(from + 2 * k)?, self.real(from + 2 * k + 1)?);
        }
        Unitary2x2::new(z[0], z[1], z[2], z[3]).map_err(|_| self.err(ParseErrorKind::NotUnitary))
    }

    fn gates(&self) -> Result<Vec<GateOp>, ParseError> {
        let single = |g: SingleGate| -> Result<Vec<GateOp>, ParseError> {
            self.arity(1)?;
            Ok(vec![GateOp::single(g, self.qubit(0)?)])
        };
        let controlled = |g: ControlledGate, extra: usize| -> Result<Vec<GateOp>, ParseError> {
            self.arity(2 + extra)?;
            let (control, target) = self.pair()?;
            Ok(vec![GateOp::Controlled {
                gate: g,
                control,
                target,
            }])
        };
        match self.mnemonic {
            "h" => single(SingleGate::H),
            "x" => single(SingleGate::X),
            "y" => single(SingleGate::Y),
            "z" => single(SingleGate::Z),
            "s" => single(SingleGate::S),
            "t" => single(SingleGate::T),
            "u" => {
                self.arity(9)?;
                let target = self.qubit(0)?;
                Ok(vec![GateOp::single(SingleGate::U(self.matrix(1)?), target)])
            }
            "cx" => controlled(ControlledGate::Cx, 0),
            "cz" => controlled(ControlledGate::Cz, 0),
            "cp" => {
                self.arity(3)?;
                let theta = self.real(2)?;
                controlled(ControlledGate::Cp(theta), 1)
            }
            "cu" => {
                self.arity(10)?;
                let u = self.matrix(2)?;
                controlled(ControlledGate::Cu(u), 8)
            }
            "swap" => {
                self.arity(2)?;
                let (a, b) = self.pair()?;
                let cx = |c, t| GateOp::Controlled {
                    gate: ControlledGate::Cx,
                    control: c,
                    target: t,
                };
                Ok(vec![cx(a, b), cx(b, a), cx(a, b)])
            }
            "flip" => {
                self.arity(1)?;
                let index = self.uint(0)?;
                if index >> self.n_qubits != 0 {
                    return Err(self.err(ParseErrorKind::IndexOutOfRange {
                        index,
                        n_qubits: self.n_qubits,
                    }));
                }
                Ok(vec![GateOp::flip(index)])
            }
            other => Err(self.err(ParseErrorKind::UnknownMnemonic(other.to_string()))),
        }
    }
}

/// Parses the circuit text format. Errors carry 1-based line numbers.
pub fn parse_circuit(text: &str) -> Result<CircuitProgram, ParseError> {
    let mut program: Option<CircuitProgram> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("");
        let mut words = content.split_whitespace();
        let Some(mnemonic) = words.next() else {
            continue;
        };
        let args: Vec<&str> = words.collect();
        let err = |kind| ParseError { line, kind };

        if mnemonic == "qubits" {
            if program.is_some() {
                return Err(err(ParseErrorKind::DuplicateHeader));
            }
            if args.len() != 1 {
                return Err(err(ParseErrorKind::Arity {
                    mnemonic: "qubits".into(),
                    expected: 1,
                    found: args.len(),
                }));
            }
            let n: usize = args[0]
                .parse()
                .map_err(|_| err(ParseErrorKind::Number(args[0].to_string())))?;
            if !(1..=crate::state::MAX_QUBITS).contains(&n) {
                return Err(err(ParseErrorKind::QubitCount));
            }
            program = Some(CircuitProgram::new("", n));
            continue;
        }

        let Some(prog) = program.as_mut() else {
            return Err(err(ParseErrorKind::MissingHeader));
        };
        let parser = LineParser {
            line,
            mnemonic,
            args,
            n_qubits: prog.n_qubits,
        };
        prog.gates.extend(parser.gates()?);
    }
    program.ok_or(ParseError {
        line: last_line.max(1),
        kind: ParseErrorKind::MissingHeader,
    })
}

/// Textbook QFT: for each qubit from high to low, a Hadamard followed by
/// controlled phases `π/2^(j-k)` from every lower qubit `k`, then a swap
/// network reversing qubit order. With qubit 0 as the least-significant
/// bit the circuit maps `|y⟩` to `Σ_x e^{2πi·xy/2^n} |x⟩ / √2^n`.
pub fn build_qft(n_qubits: usize) -> Result<CircuitProgram> {
    if !(1..=crate::state::MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::QubitCount(n_qubits));
    }
    let mut p = CircuitProgram::new(format!("qft-{n_qubits}"), n_qubits);
    for j in (0..n_qubits).rev() {
        p.push(GateOp::h(j))?;
        for k in (0..j).rev() {
            p.push(GateOp::cp(k, j, qft_angle(j - k))?)?;
        }
    }
    for i in 0..n_qubits / 2 {
        p.push_swap(i, n_qubits - 1 - i)?;
    }
    Ok(p)
}

/// `round(π/4 · √(2^n))`.
pub fn default_grover_iterations(n_qubits: usize) -> usize {
    (PI / 4.0 * 2f64.powf(n_qubits as f64 / 2.0)).round() as usize
}

/// Grover search for one marked basis state. The oracle and the
/// reflection about `|0…0⟩` inside the diffusion step are single-amplitude
/// phase flips; the diffusion's global phase of -1 is left in place.
pub fn build_grover(
    n_qubits: usize,
    marked: usize,
    iterations: Option<usize>,
) -> Result<CircuitProgram> {
    if !(1..=crate::state::MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::QubitCount(n_qubits));
    }
    if marked >> n_qubits != 0 {
        return Err(Error::IndexOutOfRange {
            index: marked,
            n_qubits,
        });
    }
    let iterations = iterations.unwrap_or_else(|| default_grover_iterations(n_qubits));
    let mut p = CircuitProgram::new(format!("grover-{n_qubits}-m{marked}"), n_qubits);
    let hadamards = |p: &mut CircuitProgram| (0..n_qubits).try_for_each(|q| p.push(GateOp::h(q)));
    hadamards(&mut p)?;
    for _ in 0..iterations {
        p.push(GateOp::flip(marked))?;
        hadamards(&mut p)?;
        p.push(GateOp::flip(0))?;
        hadamards(&mut p)?;
    }
    Ok(p)
}

/// Random circuit over the full gate alphabet, reproducible from `seed`.
pub fn build_random(n_qubits: usize, n_gates: usize, seed: u64) -> Result<CircuitProgram> {
    if !(1..=crate::state::MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::QubitCount(n_qubits));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = CircuitProgram::new(format!("random-{n_qubits}-s{seed}"), n_qubits);
    for _ in 0..n_gates {
        p.push(random_gate(&mut rng, n_qubits))?;
    }
    Ok(p)
}

/// Haar-like random 2x2 unitary from three angles and a global phase.
pub fn random_unitary<R: Rng>(rng: &mut R) -> Unitary2x2 {
    let (a, b, c, d): (f64, f64, f64, f64) = (
        rng.gen_range(0.0..2.0 * PI),
        rng.gen_range(0.0..2.0 * PI),
        rng.gen_range(0.0..2.0 * PI),
        rng.gen_range(0.0..PI / 2.0),
    );
    let e = |phi: f64| Complex64::from_polar(1.0, phi);
    let (cos, sin) = (d.cos(), d.sin());
    let g = e(a);
    Unitary2x2::new(
        g * e(b) * cos,
        g * e(c) * sin,
        -g * e(-c) * sin,
        g * e(-b) * cos,
    )
    .expect("parametrized matrix is unitary")
}

pub fn random_gate<R: Rng>(rng: &mut R, n_qubits: usize) -> GateOp {
    let q = rng.gen_range(0..n_qubits);
    let other = |rng: &mut R| {
        let o = rng.gen_range(0..n_qubits - 1);
        if o >= q {
            o + 1
        } else {
            o
        }
    };
    let kind = if n_qubits == 1 {
        rng.gen_range(0..3)
    } else {
        rng.gen_range(0..6)
    };
    match kind {
        0 => GateOp::single(
            [
                SingleGate::H,
                SingleGate::X,
                SingleGate::Y,
                SingleGate::Z,
                SingleGate::S,
                SingleGate::T,
            ][rng.gen_range(0..6)],
            q,
        ),
        1 => GateOp::single(SingleGate::U(random_unitary(rng)), q),
        2 => GateOp::flip(rng.gen_range(0..1usize << n_qubits)),
        3 => GateOp::Controlled {
            gate: ControlledGate::Cx,
            control: other(rng),
            target: q,
        },
        4 => GateOp::Controlled {
            gate: ControlledGate::Cp(rng.gen_range(-PI..PI)),
            control: other(rng),
            target: q,
        },
        _ => GateOp::Controlled {
            gate: ControlledGate::Cu(random_unitary(rng)),
            control: other(rng),
            target: q,
        },
    }
}
