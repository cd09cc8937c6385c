//! Multiindices and the shift points of the higher-order parameter-shift rule.
//!
//! For a multiindex `α` with `|α| = k` and a sign tuple
//! `𝔦 = (𝔦_{1,1..α_1}, …, 𝔦_{m,1..α_m}) ∈ {-1,1}^k`, the shift point is
//! `p_{α,𝔦} = (π/2)·((Σ_k 𝔦_{1,k}) mod 4, …, (Σ_k 𝔦_{m,k}) mod 4)` and
//! `D^α g(0) = 2^{-k} Σ_𝔦 (Π 𝔦) g(p_{α,𝔦})` for every `g` with frequencies in
//! `{-1,0,1}ᵐ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::GridPoint;

/// Largest order for which `α!` is computed exactly in `u64`.
pub const MAX_ORDER: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(m: usize) -> Self {
        Self(vec![0; m])
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α|`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// `α! = Π α_j!`, exact. Fails once the order exceeds [`MAX_ORDER`].
    pub fn factorial(&self) -> Result<u64> {
        if self.order() > MAX_ORDER {
            return Err(Error::validation(format!(
                "multiindex order {} exceeds {MAX_ORDER}",
                self.order()
            )));
        }
        Ok(self.0.iter().map(|&a| factorial(a as usize)).product())
    }

    /// `θ^α = Π θ_j^{α_j}`.
    pub fn monomial(&self, theta: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(theta)
            .filter(|(&a, _)| a > 0)
            .map(|(&a, &t)| t.powi(a as i32))
            .product()
    }
}

pub(crate) fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `α ∈ ℤ_{≥0}^m` with `|α| ≤ L` in graded lexicographic order: by
/// order, then lexicographically descending, e.g. `(0,0), (1,0), (0,1)`.
pub fn enumerate_multiindices(m: usize, max_order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut buf = vec![0u32; m];
    for k in 0..=max_order {
        fill_order(&mut buf, 0, k, &mut out);
    }
    out
}

fn fill_order(buf: &mut [u32], pos: usize, remaining: usize, out: &mut Vec<MultiIndex>) {
    if pos == buf.len() {
        if remaining == 0 {
            out.push(MultiIndex(buf.to_vec()));
        }
        return;
    }
    if pos + 1 == buf.len() {
        buf[pos] = remaining as u32;
        out.push(MultiIndex(buf.to_vec()));
        buf[pos] = 0;
        return;
    }
    for a in (0..=remaining).rev() {
        buf[pos] = a as u32;
        fill_order(buf, pos + 1, remaining - a, out);
    }
    buf[pos] = 0;
}

/// A sign tuple `𝔦 ∈ {-1,+1}^{|α|}`, grouped per coordinate in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShiftAssignment(Vec<i8>);

impl ShiftAssignment {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::validation("shift signs must be ±1"));
        }
        Ok(Self(signs))
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All of `{-1,+1}^k` by binary counting, first entry most significant
    /// and `-1 ↦ 0`.
    pub fn all(k: usize) -> impl Iterator<Item = ShiftAssignment> {
        (0u64..1 << k).map(move |code| {
            ShiftAssignment(
                (0..k)
                    .map(|t| if code >> (k - 1 - t) & 1 == 1 { 1 } else { -1 })
                    .collect(),
            )
        })
    }
}

/// `𝔦^{(1,…,1)}`, the product of all signs (`+1` for the empty tuple).
pub fn sign_product(assignment: &ShiftAssignment) -> i8 {
    assignment.0.iter().product()
}

/// The canonical grid point `p_{α,𝔦}`.
pub fn shift_point(alpha: &MultiIndex, assignment: &ShiftAssignment) -> Result<GridPoint> {
    if assignment.len() != alpha.order() {
        return Err(Error::validation(format!(
            "shift assignment has length {}, multiindex order is {}",
            assignment.len(),
            alpha.order()
        )));
    }
    let mut signs = assignment.0.iter();
    let sums: Vec<i64> = alpha
        .entries()
        .iter()
        .map(|&a| signs.by_ref().take(a as usize).map(|&s| i64::from(s)).sum())
        .collect();
    Ok(GridPoint::from_multiples(&sums))
}

/// `(Π 𝔦, p_{α,𝔦})` for every sign tuple, in [`ShiftAssignment::all`] order.
pub fn shift_terms(alpha: &MultiIndex) -> impl Iterator<Item = (i8, GridPoint)> + '_ {
    ShiftAssignment::all(alpha.order()).map(move |a| {
        let p = shift_point(alpha, &a).expect("assignment length matches by construction");
        (sign_product(&a), p)
    })
}
