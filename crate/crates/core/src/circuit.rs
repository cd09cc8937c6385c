//! Parametrized circuits `U(θ) = C_{m+1} R_m(θ_m) C_m ⋯ R_1(θ_1) C_1`.
//!
//! Every parameter drives exactly one rotation `exp(-i θ_j/2 · G_j)` with a
//! non-identity Pauli word `G_j`, so each rotation has generator spectrum
//! `{-1, +1}`.
//!
//! Text format, one gate per line after a `qubits <n> params <m>` header:
//!
//! ```text
//! qubits 2 params 2
//! RX 0 1
//! RX 1 2
//! CNOT 0 1
//! T 1
//! CNOT 0 1
//! ```
//!
//! Fixed gates are `H q`, `S q`, `T q`, `X q`, `Y q`, `Z q` and `CNOT c t`.
//! Rotations are `RX q j`, `RY q j`, `RZ q j` and `RP <word> j`, where the
//! parameter index `j` counts from 1. `#` starts a comment.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliOp, PauliString};

/// Dense simulation guard.
pub const MAX_QUBITS: usize = 24;

const UNITARY_TOL: f64 = 1e-10;

pub type Matrix2 = [[Complex64; 2]; 2];
pub type Matrix4 = [[Complex64; 4]; 4];

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    S(usize),
    T(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cnot {
        control: usize,
        target: usize,
    },
    /// Arbitrary single-qubit unitary.
    Unitary1 {
        wire: usize,
        matrix: Matrix2,
    },
    /// Arbitrary two-qubit unitary. Local basis index is
    /// `bit(wires[0]) | bit(wires[1]) << 1`.
    Unitary2 {
        wires: [usize; 2],
        matrix: Matrix4,
    },
    /// `exp(-i θ_param / 2 · generator)`; `param` is zero-based.
    Rotation {
        generator: PauliString,
        param: usize,
    },
}

impl Gate {
    pub fn rx(n: usize, qubit: usize, param: usize) -> Result<Self> {
        Self::pauli_rotation(n, qubit, PauliOp::X, param)
    }

    pub fn ry(n: usize, qubit: usize, param: usize) -> Result<Self> {
        Self::pauli_rotation(n, qubit, PauliOp::Y, param)
    }

    pub fn rz(n: usize, qubit: usize, param: usize) -> Result<Self> {
        Self::pauli_rotation(n, qubit, PauliOp::Z, param)
    }

    fn pauli_rotation(n: usize, qubit: usize, op: PauliOp, param: usize) -> Result<Self> {
        Ok(Gate::Rotation {
            generator: PauliString::single(n, qubit, op)?,
            param,
        })
    }

    /// Wires the gate acts on (for rotations, the generator's support).
    pub fn wires(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::S(q) | Gate::T(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => vec![*q],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Unitary1 { wire, .. } => vec![*wire],
            Gate::Unitary2 { wires, .. } => wires.to_vec(),
            Gate::Rotation { generator, .. } => generator.support(),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let wires = self.wires();
        for (i, &w) in wires.iter().enumerate() {
            if w >= n {
                return Err(Error::validation(format!(
                    "wire {w} out of range for {n} qubits"
                )));
            }
            if wires[..i].contains(&w) {
                return Err(Error::validation(format!("gate uses wire {w} twice")));
            }
        }
        match self {
            Gate::Rotation { generator, .. } => {
                if generator.num_qubits() != n {
                    return Err(Error::validation(format!(
                        "rotation generator {generator} does not act on {n} qubits"
                    )));
                }
                if generator.is_identity() {
                    return Err(Error::validation(
                        "rotation generator must not be the identity",
                    ));
                }
            }
            Gate::Unitary1 { matrix, .. } => check_unitary(&matrix.map(|r| r.to_vec()))?,
            Gate::Unitary2 { matrix, .. } => check_unitary(&matrix.map(|r| r.to_vec()))?,
            _ => {}
        }
        Ok(())
    }
}

fn check_unitary(rows: &[Vec<Complex64>]) -> Result<()> {
    let d = rows.len();
    for i in 0..d {
        for j in 0..d {
            let dot: Complex64 = (0..d).map(|k| rows[k][i].conj() * rows[k][j]).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            if (dot - expected).norm() > UNITARY_TOL {
                return Err(Error::validation("custom gate matrix is not unitary"));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametrizedCircuit {
    n: usize,
    m: usize,
    gates: Vec<Gate>,
}

impl ParametrizedCircuit {
    pub fn new(n: usize, m: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("circuit needs at least one qubit"));
        }
        if n > MAX_QUBITS {
            return Err(Error::Size(format!(
                "dense simulation is limited to {MAX_QUBITS} qubits, got {n}"
            )));
        }
        let mut seen = vec![false; m];
        for gate in &gates {
            gate.validate(n)?;
            if let Gate::Rotation { param, .. } = gate {
                match seen.get_mut(*param) {
                    None => {
                        return Err(Error::validation(format!(
                            "parameter index {} out of range 1..={m}",
                            param + 1
                        )))
                    }
                    Some(true) => {
                        return Err(Error::validation(format!(
                            "parameter {} drives more than one rotation",
                            param + 1
                        )))
                    }
                    Some(s) => *s = true,
                }
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!(
                "parameter {} is never used",
                j + 1
            )));
        }
        Ok(Self { n, m, gates })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn num_params(&self) -> usize {
        self.m
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut gates = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let err = |msg: String| Error::Parse { line: lineno, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let int = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .map_err(|_| err(format!("expected a non-negative integer, got {s:?}")))
            };
            let Some((n, _)) = header else {
                match fields.as_slice() {
                    ["qubits", n, "params", m] => {
                        header = Some((int(n)?, int(m)?));
                        continue;
                    }
                    _ => return Err(err("expected header `qubits <n> params <m>`".into())),
                }
            };
            let param = |s: &str| -> Result<usize> {
                match int(s)? {
                    0 => Err(err("parameter indices start at 1".into())),
                    j => Ok(j - 1),
                }
            };
            let gate = match fields.as_slice() {
                ["H", q] => Gate::H(int(q)?),
                ["S", q] => Gate::S(int(q)?),
                ["T", q] => Gate::T(int(q)?),
                ["X", q] => Gate::X(int(q)?),
                ["Y", q] => Gate::Y(int(q)?),
                ["Z", q] => Gate::Z(int(q)?),
                ["CNOT", c, t] => Gate::Cnot {
                    control: int(c)?,
                    target: int(t)?,
                },
                [rot @ ("RX" | "RY" | "RZ"), q, j] => {
                    let op = match *rot {
                        "RX" => PauliOp::X,
                        "RY" => PauliOp::Y,
                        _ => PauliOp::Z,
                    };
                    Gate::Rotation {
                        generator: PauliString::single(n, int(q)?, op)
                            .map_err(|e| err(e.to_string()))?,
                        param: param(j)?,
                    }
                }
                ["RP", word, j] => Gate::Rotation {
                    generator: word.parse().map_err(|e: Error| err(e.to_string()))?,
                    param: param(j)?,
                },
                _ => return Err(err(format!("unrecognized gate line {line:?}"))),
            };
            gates.push(gate);
        }
        let (n, m) = header.ok_or_else(|| Error::validation("circuit file has no header"))?;
        Self::new(n, m, gates)
    }

    /// Serializes to the text format. Custom unitaries have no text form.
    pub fn to_text(&self) -> Result<String> {
        let mut out = format!("qubits {} params {}\n", self.n, self.m);
        for gate in &self.gates {
            match gate {
                Gate::H(q) => writeln!(out, "H {q}"),
                Gate::S(q) => writeln!(out, "S {q}"),
                Gate::T(q) => writeln!(out, "T {q}"),
                Gate::X(q) => writeln!(out, "X {q}"),
                Gate::Y(q) => writeln!(out, "Y {q}"),
                Gate::Z(q) => writeln!(out, "Z {q}"),
                Gate::Cnot { control, target } => writeln!(out, "CNOT {control} {target}"),
                Gate::Rotation { generator, param } => {
                    let support = generator.support();
                    match (support.as_slice(), generator.ops()[support[0]]) {
                        ([q], PauliOp::X) => writeln!(out, "RX {q} {}", param + 1),
                        ([q], PauliOp::Y) => writeln!(out, "RY {q} {}", param + 1),
                        ([q], PauliOp::Z) => writeln!(out, "RZ {q} {}", param + 1),
                        _ => writeln!(out, "RP {generator} {}", param + 1),
                    }
                }
                Gate::Unitary1 { .. } | Gate::Unitary2 { .. } => {
                    return Err(Error::validation(
                        "custom unitaries cannot be written in the circuit text format",
                    ))
                }
            }
            .expect("writing to a String cannot fail");
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print_round_trip() {
        let text =
            "qubits 3 params 3\nH 0\nRX 0 1\nRP XYZ 3\nCNOT 0 2\nT 2\nRZ 1 2 # tail comment\n";
        let circuit = ParametrizedCircuit::parse(text).unwrap();
        assert_eq!(circuit.num_qubits(), 3);
        assert_eq!(circuit.num_params(), 3);
        assert_eq!(circuit.gates().len(), 6);
        let again = ParametrizedCircuit::parse(&circuit.to_text().unwrap()).unwrap();
        assert_eq!(again, circuit);
    }

    #[test]
    fn parameters_must_be_used_exactly_once() {
        let shared = "qubits 1 params 1\nRX 0 1\nRZ 0 1\n";
        assert!(matches!(
            ParametrizedCircuit::parse(shared),
            Err(Error::Validation(_))
        ));
        let unused = "qubits 1 params 2\nRX 0 1\n";
        assert!(matches!(
            ParametrizedCircuit::parse(unused),
            Err(Error::Validation(_))
        ));
        let zero = "qubits 1 params 1\nRX 0 0\n";
        assert!(matches!(
            ParametrizedCircuit::parse(zero),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_invalid_gates() {
        assert!(ParametrizedCircuit::parse("qubits 2 params 0\nCNOT 1 1\n").is_err());
        assert!(ParametrizedCircuit::parse("qubits 2 params 0\nH 2\n").is_err());
        assert!(ParametrizedCircuit::parse("qubits 2 params 1\nRP II 1\n").is_err());
        assert!(ParametrizedCircuit::parse("qubits 2 params 1\nRP XXX 1\n").is_err());
        assert!(ParametrizedCircuit::parse("H 0\n").is_err());
        assert!(matches!(
            ParametrizedCircuit::new(MAX_QUBITS + 1, 0, vec![]),
            Err(Error::Size(_))
        ));
        let not_unitary = Gate::Unitary1 {
            wire: 0,
            matrix: [[Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)]; 2],
        };
        assert!(ParametrizedCircuit::new(1, 0, vec![not_unitary]).is_err());
    }
}
