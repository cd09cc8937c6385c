//! Dense state-vector evaluation of `f(θ) = ⟨ψ(θ)|M|ψ(θ)⟩`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::circuit::{Gate, Matrix2, Matrix4, ParametrizedCircuit};
use crate::error::{Error, Result};
use crate::pauli::{Observable, PauliMasks};

const NORM_TOL: f64 = 1e-8;

/// Returns `U(θ)|0…0⟩`.
pub fn simulate(circuit: &ParametrizedCircuit, theta: &[f64]) -> Result<Vec<Complex64>> {
    if theta.len() != circuit.num_params() {
        return Err(Error::validation(format!(
            "expected {} parameters, got {}",
            circuit.num_params(),
            theta.len()
        )));
    }
    let mut state = vec![Complex64::new(0.0, 0.0); 1 << circuit.num_qubits()];
    state[0] = Complex64::new(1.0, 0.0);
    for gate in circuit.gates() {
        apply_gate(&mut state, gate, theta);
    }
    Ok(state)
}

/// `Σ_t a_t ⟨ψ|Q_t|ψ⟩` for a normalized state.
pub fn expectation(state: &[Complex64], obs: &Observable) -> Result<f64> {
    if state.len() != 1usize << obs.num_qubits() {
        return Err(Error::validation(format!(
            "state has {} amplitudes but the observable acts on {} qubits",
            state.len(),
            obs.num_qubits()
        )));
    }
    let norm_sqr: f64 = state.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(Error::validation(format!(
            "state is not normalized (‖ψ‖² = {norm_sqr})"
        )));
    }
    Ok(obs
        .terms()
        .iter()
        .map(|(coeff, word)| coeff * pauli_expectation(state, &word.masks()))
        .sum())
}

/// `f(θ)` for the given circuit and observable.
pub fn f_eval(circuit: &ParametrizedCircuit, obs: &Observable, theta: &[f64]) -> Result<f64> {
    if circuit.num_qubits() != obs.num_qubits() {
        return Err(Error::validation(format!(
            "circuit has {} qubits, observable {}",
            circuit.num_qubits(),
            obs.num_qubits()
        )));
    }
    let state = simulate(circuit, theta)?;
    expectation(&state, obs)
}

fn pauli_expectation(state: &[Complex64], masks: &PauliMasks) -> f64 {
    let value: Complex64 = state
        .iter()
        .enumerate()
        .map(|(b, amp)| state[b ^ masks.x].conj() * masks.phase(b) * amp)
        .sum();
    debug_assert!(
        value.im.abs() < 1e-10,
        "Pauli expectation has imaginary part {}",
        value.im
    );
    value.re
}

fn apply_gate(state: &mut [Complex64], gate: &Gate, theta: &[f64]) {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match gate {
        Gate::H(q) => {
            let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
            apply_1q(state, *q, &[[h, h], [h, -h]]);
        }
        Gate::X(q) => apply_1q(state, *q, &[[zero, one], [one, zero]]),
        Gate::Y(q) => apply_1q(state, *q, &[[zero, -i], [i, zero]]),
        Gate::Z(q) => apply_phase(state, *q, -one),
        Gate::S(q) => apply_phase(state, *q, i),
        Gate::T(q) => apply_phase(
            state,
            *q,
            Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4),
        ),
        Gate::Cnot { control, target } => {
            let (c, t) = (1usize << control, 1usize << target);
            for b in 0..state.len() {
                if b & c != 0 && b & t == 0 {
                    state.swap(b, b | t);
                }
            }
        }
        Gate::Unitary1 { wire, matrix } => apply_1q(state, *wire, matrix),
        Gate::Unitary2 { wires, matrix } => apply_2q(state, *wires, matrix),
        Gate::Rotation { generator, param } => {
            // exp(-iθ/2 P) = cos(θ/2) I - i sin(θ/2) P
            let half = 0.5 * theta[*param];
            let (c, s) = (half.cos(), half.sin());
            let masks = generator.masks();
            let minus_is = Complex64::new(0.0, -s);
            for a in 0..state.len() {
                let b = a ^ masks.x;
                if masks.x == 0 {
                    state[a] *= c + minus_is * masks.phase(a);
                } else if a < b {
                    // P|b⟩ = phase(b)|a⟩ and P|a⟩ = phase(a)|b⟩
                    let (va, vb) = (state[a], state[b]);
                    state[a] = va * c + minus_is * masks.phase(b) * vb;
                    state[b] = vb * c + minus_is * masks.phase(a) * va;
                }
            }
        }
    }
}

fn apply_1q(state: &mut [Complex64], q: usize, m: &Matrix2) {
    let bit = 1usize << q;
    for a in 0..state.len() {
        if a & bit == 0 {
            let (v0, v1) = (state[a], state[a | bit]);
            state[a] = m[0][0] * v0 + m[0][1] * v1;
            state[a | bit] = m[1][0] * v0 + m[1][1] * v1;
        }
    }
}

fn apply_phase(state: &mut [Complex64], q: usize, phase: Complex64) {
    let bit = 1usize << q;
    for (a, amp) in state.iter_mut().enumerate() {
        if a & bit != 0 {
            *amp *= phase;
        }
    }
}

fn apply_2q(state: &mut [Complex64], wires: [usize; 2], m: &Matrix4) {
    let (b0, b1) = (1usize << wires[0], 1usize << wires[1]);
    for a in 0..state.len() {
        if a & (b0 | b1) == 0 {
            let idx = [a, a | b0, a | b1, a | b0 | b1];
            let v = idx.map(|k| state[k]);
            for (r, &k) in idx.iter().enumerate() {
                state[k] = (0..4).map(|c| m[r][c] * v[c]).sum();
            }
        }
    }
}
