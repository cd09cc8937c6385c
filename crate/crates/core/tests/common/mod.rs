#![allow(dead_code)]

use pqc_surrogate::multiindex::MultiIndex;
use pqc_surrogate::{
    CircuitObjective, Gate, Observable, ParametrizedCircuit, PauliOp, PauliString,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_word<R: Rng>(rng: &mut R, n: usize) -> PauliString {
    loop {
        let ops: Vec<PauliOp> = (0..n)
            .map(|_| PauliOp::ALL[rng.random_range(0..4)])
            .collect();
        let w = PauliString::new(ops).unwrap();
        if !w.is_identity() {
            return w;
        }
    }
}

/// `m` Pauli rotations with random generators, each followed by a random
/// fixed gate, plus a random observable of a few terms.
pub fn random_objective(n: usize, m: usize, seed: u64) -> CircuitObjective {
    let mut rng = rng(seed);
    let mut gates = vec![Gate::H(0)];
    for j in 0..m {
        gates.push(Gate::Rotation {
            generator: random_word(&mut rng, n),
            param: j,
        });
        let q = rng.random_range(0..n);
        gates.push(match rng.random_range(0..4) {
            0 => Gate::H(q),
            1 => Gate::T(q),
            2 if n > 1 => Gate::Cnot {
                control: q,
                target: (q + 1) % n,
            },
            _ => Gate::S(q),
        });
    }
    let circuit = ParametrizedCircuit::new(n, m, gates).unwrap();
    let terms: Vec<(f64, PauliString)> = (0..3)
        .map(|_| (rng.random_range(-1.0..1.0), random_word(&mut rng, n)))
        .collect();
    CircuitObjective::new(circuit, Observable::new(n, terms).unwrap()).unwrap()
}

pub fn random_theta<R: Rng>(rng: &mut R, m: usize, half_width: f64) -> Vec<f64> {
    (0..m)
        .map(|_| rng.random_range(-half_width..half_width))
        .collect()
}

/// Random point with at most `l` non-zero coordinates.
pub fn random_sparse_theta<R: Rng>(rng: &mut R, m: usize, l: usize) -> Vec<f64> {
    let mut theta = vec![0.0; m];
    for _ in 0..l {
        let j = rng.random_range(0..m);
        theta[j] = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    }
    theta
}

/// Central finite-difference stencil for `D^α f(0)`: tensor product of the
/// 1-D central stencils for orders 0..=3 with step `h`.
pub fn finite_difference(f: &dyn Fn(&[f64]) -> f64, alpha: &MultiIndex, h: f64) -> f64 {
    fn stencil(order: u32) -> Vec<(f64, f64)> {
        match order {
            0 => vec![(0.0, 1.0)],
            1 => vec![(-1.0, -0.5), (1.0, 0.5)],
            2 => vec![(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
            3 => vec![(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
            _ => unreachable!("orders above 3 are not used"),
        }
    }
    let m = alpha.dim();
    let stencils: Vec<Vec<(f64, f64)>> = alpha.entries().iter().map(|&a| stencil(a)).collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; m];
    loop {
        let mut theta = vec![0.0; m];
        let mut w = 1.0;
        for j in 0..m {
            let (offset, weight) = stencils[j][idx[j]];
            theta[j] = offset * h;
            w *= weight;
        }
        total += w * f(&theta);
        let mut j = 0;
        loop {
            if j == m {
                return total / h.powi(alpha.order() as i32);
            }
            idx[j] += 1;
            if idx[j] < stencils[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// A closure as an [`Objective`].
pub struct FnObjective<F>(pub usize, pub F);

impl<F> pqc_surrogate::Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> pqc_surrogate::Result<f64> + Sync,
{
    fn num_params(&self) -> usize {
        self.0
    }

    fn value(&self, theta: &[f64]) -> pqc_surrogate::Result<f64> {
        (self.1)(theta)
    }
}
