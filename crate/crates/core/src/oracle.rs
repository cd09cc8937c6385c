//! Grid-point oracle: evaluations of `f` on `(π/2)ℤᵐ` with memoization.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use crate::circuit::ParametrizedCircuit;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::pauli::Observable;
use crate::simulator::f_eval;

/// A real function of `m` parameters that can be sampled pointwise.
pub trait Objective: Sync {
    fn num_params(&self) -> usize;

    fn value(&self, theta: &[f64]) -> Result<f64>;

    /// Known upper bound on `sup |f|`, if any.
    fn sup_norm_bound(&self) -> Option<f64> {
        None
    }

    fn value_at(&self, p: &GridPoint) -> Result<f64> {
        self.value(&p.to_angles())
    }
}

/// `θ ↦ ⟨ψ(θ)|M|ψ(θ)⟩` for a fixed circuit and observable.
#[derive(Debug, Clone)]
pub struct CircuitObjective {
    circuit: ParametrizedCircuit,
    observable: Observable,
}

impl CircuitObjective {
    pub fn new(circuit: ParametrizedCircuit, observable: Observable) -> Result<Self> {
        if circuit.num_qubits() != observable.num_qubits() {
            return Err(Error::validation(format!(
                "circuit has {} qubits, observable {}",
                circuit.num_qubits(),
                observable.num_qubits()
            )));
        }
        Ok(Self {
            circuit,
            observable,
        })
    }

    pub fn circuit(&self) -> &ParametrizedCircuit {
        &self.circuit
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }
}

impl Objective for CircuitObjective {
    fn num_params(&self) -> usize {
        self.circuit.num_params()
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        f_eval(&self.circuit, &self.observable, theta)
    }

    fn sup_norm_bound(&self) -> Option<f64> {
        Some(self.observable.one_norm())
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn num_params(&self) -> usize {
        (**self).num_params()
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        (**self).value(theta)
    }

    fn sup_norm_bound(&self) -> Option<f64> {
        (**self).sup_norm_bound()
    }

    fn value_at(&self, p: &GridPoint) -> Result<f64> {
        (**self).value_at(p)
    }
}

/// The point `(π/2)·r` for a residue vector `r ∈ {0,1,2,3}ᵐ`.
///
/// Stored as exact integers so it can key a hash map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    residues: Vec<u8>,
}

impl GridPoint {
    pub fn zero(m: usize) -> Self {
        Self {
            residues: vec![0; m],
        }
    }

    /// Canonicalizes integer multiples of π/2 by Euclidean reduction mod 4.
    pub fn from_multiples(multiples: &[i64]) -> Self {
        Self {
            residues: multiples.iter().map(|k| k.rem_euclid(4) as u8).collect(),
        }
    }

    pub fn from_residues(residues: Vec<u8>) -> Result<Self> {
        if let Some(r) = residues.iter().find(|&&r| r > 3) {
            return Err(Error::validation(format!("residue {r} is not in 0..=3")));
        }
        Ok(Self { residues })
    }

    pub fn residues(&self) -> &[u8] {
        &self.residues
    }

    pub fn dim(&self) -> usize {
        self.residues.len()
    }

    /// Number of non-zero coordinates.
    pub fn support_size(&self) -> usize {
        self.residues.iter().filter(|&&r| r != 0).count()
    }

    /// Coordinates `(π/2)·r_j` with `r_j ∈ {0,1,2,3}`.
    pub fn to_angles(&self) -> Vec<f64> {
        self.residues
            .iter()
            .map(|&r| FRAC_PI_2 * f64::from(r))
            .collect()
    }

    /// Coordinates in `(-π, π]`, i.e. residue 3 maps to `-π/2`.
    pub fn to_centered_angles(&self) -> Vec<f64> {
        self.residues.iter().map(|&r| centered_angle(r)).collect()
    }

    /// Coordinate-wise sum modulo 4.
    pub fn translate(&self, by: &GridPoint) -> Result<GridPoint> {
        if by.dim() != self.dim() {
            return Err(Error::validation("grid points have different dimensions"));
        }
        Ok(Self {
            residues: self
                .residues
                .iter()
                .zip(&by.residues)
                .map(|(a, b)| (a + b) % 4)
                .collect(),
        })
    }
}

pub(crate) fn centered_angle(residue: u8) -> f64 {
    match residue {
        3 => -FRAC_PI_2,
        r => FRAC_PI_2 * f64::from(r),
    }
}

/// Synchronization contract of an [`EvaluationCache`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheMode {
    /// No memoization; every query evaluates `f`.
    Disabled,
    /// Single-threaded, exclusive access.
    Exclusive,
    /// Point sets are prefetched by parallel workers evaluating disjoint
    /// points; lookups after the populate phase read the settled map.
    Concurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct CacheStats {
    /// Distinct grid points at which `f` was evaluated.
    pub distinct: usize,
    pub hits: u64,
    pub misses: u64,
}

impl CacheStats {
    /// Total oracle queries, including repeated ones.
    pub fn queries(&self) -> u64 {
        self.hits + self.misses
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    value: f64,
    // set once an oracle query has consumed a prefetched value
    requested: bool,
}

/// Memo table `GridPoint → f(p)`.
///
/// Hit/miss accounting is the same in every mode: the first query of a point
/// is a miss (even if the value was prefetched), later queries are hits.
#[derive(Debug, Clone)]
pub struct EvaluationCache {
    mode: CacheMode,
    store: HashMap<GridPoint, Entry>,
    hits: u64,
    misses: u64,
}

impl EvaluationCache {
    pub fn new(mode: CacheMode) -> Self {
        Self {
            mode,
            store: HashMap::new(),
            hits: 0,
            misses: 0,
        }
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub(crate) fn exec(&self) -> Exec {
        match self.mode {
            CacheMode::Concurrent => Exec::Parallel,
            _ => Exec::Sequential,
        }
    }

    pub fn stats(&self) -> CacheStats {
        let distinct = match self.mode {
            CacheMode::Disabled => self.misses as usize,
            _ => self.store.len(),
        };
        CacheStats {
            distinct,
            hits: self.hits,
            misses: self.misses,
        }
    }

    /// Value of `objective` at `p`, from the table when present.
    pub fn oracle_eval<F: Objective + ?Sized>(
        &mut self,
        objective: &F,
        p: &GridPoint,
    ) -> Result<f64> {
        if self.mode == CacheMode::Disabled {
            self.misses += 1;
            return objective.value_at(p);
        }
        if let Some(entry) = self.store.get_mut(p) {
            if entry.requested {
                self.hits += 1;
            } else {
                entry.requested = true;
                self.misses += 1;
            }
            return Ok(entry.value);
        }
        let value = objective.value_at(p)?;
        self.misses += 1;
        self.store.insert(
            p.clone(),
            Entry {
                value,
                requested: true,
            },
        );
        Ok(value)
    }

    /// In [`CacheMode::Concurrent`], evaluates every point not yet in the table
    /// in parallel and publishes the results. A no-op in the other modes.
    pub fn prefetch<F: Objective + ?Sized>(
        &mut self,
        objective: &F,
        points: &[GridPoint],
    ) -> Result<()> {
        if self.mode != CacheMode::Concurrent {
            return Ok(());
        }
        let mut fresh: Vec<&GridPoint> = points
            .iter()
            .filter(|p| !self.store.contains_key(*p))
            .collect();
        fresh.sort_unstable();
        fresh.dedup();
        let values = Exec::Parallel.map(&fresh, |p| objective.value_at(p));
        for (p, value) in fresh.into_iter().zip(values) {
            self.store.insert(
                p.clone(),
                Entry {
                    value: value?,
                    requested: false,
                },
            );
        }
        Ok(())
    }
}
