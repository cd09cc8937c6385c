//! Pauli words and weighted Pauli-sum observables.
//!
//! Qubit `q` of a word corresponds to bit `q` of a computational-basis index
//! (little-endian), and character `q` of the textual word.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest qubit count accepted by [`decompose_dense`].
pub const MAX_DENSE_QUBITS: usize = 6;

const HERMITIAN_TOL: f64 = 1e-10;
const DROP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];

    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliOp::I),
            'X' => Some(PauliOp::X),
            'Y' => Some(PauliOp::Y),
            'Z' => Some(PauliOp::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }
}

/// A tensor product `P_0 ⊗ … ⊗ P_{n-1}` of single-qubit Pauli operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    ops: Vec<PauliOp>,
}

impl PauliString {
    pub fn new(ops: Vec<PauliOp>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::validation(
                "Pauli word must act on at least one qubit",
            ));
        }
        Ok(Self { ops })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(vec![PauliOp::I; n])
    }

    /// A word with `op` on qubit `q` and identities elsewhere.
    pub fn single(n: usize, q: usize, op: PauliOp) -> Result<Self> {
        if q >= n {
            return Err(Error::validation(format!(
                "qubit {q} out of range for {n} qubits"
            )));
        }
        let mut ops = vec![PauliOp::I; n];
        ops[q] = op;
        Self::new(ops)
    }

    pub fn num_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[PauliOp] {
        &self.ops
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == PauliOp::I)
    }

    /// Qubits on which the word acts non-trivially.
    pub fn support(&self) -> Vec<usize> {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != PauliOp::I)
            .map(|(q, _)| q)
            .collect()
    }

    /// Bit masks used for applying the word to basis states: `P|b⟩ =
    /// i^{y_count} (-1)^{popcount(b & z_mask)} |b ^ x_mask⟩`.
    pub(crate) fn masks(&self) -> PauliMasks {
        let mut m = PauliMasks::default();
        for (q, &p) in self.ops.iter().enumerate() {
            let bit = 1usize << q;
            match p {
                PauliOp::I => {}
                PauliOp::X => m.x |= bit,
                PauliOp::Z => m.z |= bit,
                PauliOp::Y => {
                    m.x |= bit;
                    m.z |= bit;
                    m.y_count += 1;
                }
            }
        }
        m
    }

    /// Dense `2ⁿ × 2ⁿ` matrix of the word.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.num_qubits();
        let masks = self.masks();
        let mut out = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            out[(b ^ masks.x, b)] = masks.phase(b);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PauliMasks {
    pub x: usize,
    pub z: usize,
    pub y_count: u32,
}

impl PauliMasks {
    /// Phase picked up by basis state `b`.
    #[inline]
    pub fn phase(&self, b: usize) -> Complex64 {
        let sign = if (b & self.z).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        match self.y_count % 4 {
            0 => Complex64::new(sign, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-sign, 0.0),
            _ => Complex64::new(0.0, -sign),
        }
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .trim()
            .chars()
            .map(|c| {
                PauliOp::from_char(c.to_ascii_uppercase()).ok_or_else(|| {
                    Error::validation(format!("invalid Pauli character {c:?} in {s:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ops)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.ops {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// A real-weighted sum of Pauli words on a fixed number of qubits.
///
/// Equal words are merged on construction; the order of first occurrence is
/// kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl Observable {
    pub fn new(n: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation(
                "observable must act on at least one qubit",
            ));
        }
        let mut merged: Vec<(f64, PauliString)> = Vec::new();
        for (coeff, word) in terms {
            if word.num_qubits() != n {
                return Err(Error::validation(format!(
                    "word {word} has {} qubits, expected {n}",
                    word.num_qubits()
                )));
            }
            if !coeff.is_finite() {
                return Err(Error::validation(format!(
                    "non-finite coefficient for {word}"
                )));
            }
            match merged.iter_mut().find(|(_, w)| *w == word) {
                Some((c, _)) => *c += coeff,
                None => merged.push((coeff, word)),
            }
        }
        Ok(Self { n, terms: merged })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    /// `Z ⊗ … ⊗ Z` on `n` qubits with unit weight.
    pub fn all_z(n: usize) -> Result<Self> {
        Self::new(n, [(1.0, PauliString::new(vec![PauliOp::Z; n])?)])
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    /// `Σ |a_t|`, the prefactor of the Taylor error bounds and an upper bound
    /// on `|f|`.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n;
        let mut out = DMatrix::zeros(dim, dim);
        for (c, w) in &self.terms {
            out += w.to_dense() * Complex64::new(*c, 0.0);
        }
        out
    }

    /// Parses the `<coeff> <word>` line format. Blank lines and lines starting
    /// with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: idx + 1, msg };
            let mut fields = line.split_whitespace();
            let (Some(c), Some(w), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(format!(
                    "expected `<coeff> <word>`, got {line:?}"
                )));
            };
            let coeff: f64 = c
                .parse()
                .map_err(|_| parse_err(format!("invalid coefficient {c:?}")))?;
            let word: PauliString = w.parse().map_err(|e: Error| parse_err(e.to_string()))?;
            n.get_or_insert(word.num_qubits());
            terms.push((coeff, word));
        }
        let n = n.ok_or_else(|| Error::validation("observable file contains no terms"))?;
        Self::new(n, terms)
    }

    pub fn to_text(&self) -> String {
        self.terms
            .iter()
            .map(|(c, w)| format!("{c:?} {w}\n"))
            .collect()
    }
}

/// Pauli decomposition `a_P = tr(P·M)/2ⁿ` of a dense Hermitian matrix.
///
/// Terms with `|a_P| < 1e-12` are dropped. Words are enumerated with qubit 0
/// varying slowest over `I, X, Y, Z`.
pub fn decompose_dense(matrix: &DMatrix<Complex64>) -> Result<Observable> {
    let dim = matrix.nrows();
    if dim != matrix.ncols() || dim < 2 || !dim.is_power_of_two() {
        return Err(Error::validation(format!(
            "expected a square 2ⁿ×2ⁿ matrix, got {}×{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Size(format!(
            "dense decomposition is limited to {MAX_DENSE_QUBITS} qubits, got {n}"
        )));
    }
    for r in 0..dim {
        for c in r..dim {
            if (matrix[(r, c)] - matrix[(c, r)].conj()).norm() > HERMITIAN_TOL {
                return Err(Error::validation(format!(
                    "matrix is not Hermitian at ({r}, {c})"
                )));
            }
        }
    }

    let mut terms = Vec::new();
    for code in 0..(1usize << (2 * n)) {
        let ops = (0..n)
            .map(|q| PauliOp::ALL[(code >> (2 * (n - 1 - q))) & 3])
            .collect();
        let word = PauliString::new(ops)?;
        let masks = word.masks();
        // tr(P M) = Σ_b phase(b) M[b, b ^ x]
        let trace: Complex64 = (0..dim)
            .map(|b| masks.phase(b) * matrix[(b, b ^ masks.x)])
            .sum();
        let coeff = trace.re / dim as f64;
        if coeff.abs() >= DROP_TOL {
            terms.push((coeff, word));
        }
    }
    Observable::new(n, terms)
}
