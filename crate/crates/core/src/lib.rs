//! Classical surrogates of parametrized quantum circuits.
//!
//! The objective is `f(θ) = ⟨ψ(θ)|M|ψ(θ)⟩` with `ψ(θ) = U(θ)|0…0⟩`, where the
//! parameters enter through Pauli rotations `exp(-iθ_j/2 · P_j)` and `M` is a
//! real combination of Pauli words. Two surrogates are built from values of
//! `f` on the grid `(π/2)ℤᵐ` only:
//!
//! * [`taylor`]: the order-`L` Taylor polynomial around 0, with every partial
//!   derivative obtained exactly from the parameter-shift rule;
//! * [`kernel`]: the interpolant in the trigonometric space spanned by
//!   frequencies `{-1,0,1}ᵐ`, sampled on the points of `(π/2){-1,0,1}ᵐ` with at
//!   most `L` non-zero entries.
//!
//! [`experiments`] holds the layered benchmark circuit, the evaluation curves
//! and the Monte Carlo `L²` error estimator.

pub mod circuit;
pub mod cli;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod kernel;
pub mod linalg;
pub mod multiindex;
pub mod oracle;
pub mod pauli;
pub mod rkhs;
pub mod simulator;
pub mod taylor;

pub use circuit::{Gate, ParametrizedCircuit};
pub use error::{Error, Result};
pub use exec::Exec;
pub use kernel::{build_kernel_surrogate, KernelSurrogate};
pub use oracle::{CacheMode, CacheStats, CircuitObjective, EvaluationCache, GridPoint, Objective};
pub use pauli::{Observable, PauliOp, PauliString};
pub use simulator::f_eval;
pub use taylor::{build_taylor, TaylorSurrogate};
