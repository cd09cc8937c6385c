//! Taylor surrogate: all partials `D^α f(0)` with `|α| ≤ L` from the
//! parameter-shift rule, assembled into `Σ_α D^α f(0)/α! · θ^α`.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::{enumerate_multiindices, factorial, shift_terms, MultiIndex, MAX_ORDER};
use crate::oracle::{EvaluationCache, GridPoint, Objective};

pub const FORMAT: &str = "taylor-v1";

/// `D^α g(0) = 2^{-|α|} Σ_𝔦 (Π 𝔦) g(p_{α,𝔦})`, with `g` sampled through
/// `oracle`. Exact for every `g` whose frequencies lie in `{-1,0,1}ᵐ`.
pub fn partial_at_zero<O>(alpha: &MultiIndex, mut oracle: O) -> Result<f64>
where
    O: FnMut(&GridPoint) -> Result<f64>,
{
    let mut acc = 0.0;
    for (sign, p) in shift_terms(alpha) {
        let v = oracle(&p)?;
        acc += if sign > 0 { v } else { -v };
    }
    Ok(acc * 0.5f64.powi(alpha.order() as i32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSurrogate {
    m: usize,
    order: usize,
    /// `(α, D^α f(0)/α!)` for every `|α| ≤ L`, in enumeration order.
    coeffs: Vec<(MultiIndex, f64)>,
    one_norm: Option<f64>,
}

/// Builds the order-`order` Taylor surrogate of `objective` around 0.
///
/// All partials share `cache`, so grid points reached from several `(α, 𝔦)`
/// are sampled once.
pub fn build_taylor<F: Objective + ?Sized>(
    objective: &F,
    order: usize,
    cache: &mut EvaluationCache,
) -> Result<TaylorSurrogate> {
    if order > MAX_ORDER {
        return Err(Error::validation(format!(
            "Taylor order {order} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    let m = objective.num_params();
    let alphas = enumerate_multiindices(m, order);

    let points: Vec<GridPoint> = alphas
        .iter()
        .flat_map(|a| shift_terms(a).map(|(_, p)| p))
        .collect();
    cache.prefetch(objective, &points)?;

    let mut coeffs = Vec::with_capacity(alphas.len());
    for alpha in alphas {
        let d = partial_at_zero(&alpha, |p| cache.oracle_eval(objective, p))?;
        let coeff = d / alpha.factorial()? as f64;
        coeffs.push((alpha, coeff));
    }
    Ok(TaylorSurrogate {
        m,
        order,
        coeffs,
        one_norm: objective.sup_norm_bound(),
    })
}

impl TaylorSurrogate {
    pub fn num_params(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[(MultiIndex, f64)] {
        &self.coeffs
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Option<f64> {
        self.coeffs
            .iter()
            .find(|(a, _)| a == alpha)
            .map(|(_, c)| *c)
    }

    /// `Σ|a|` of the observable the surrogate was built from, when known.
    pub fn one_norm(&self) -> Option<f64> {
        self.one_norm
    }

    /// `Σ_α c_α θ^α`, summed in enumeration order.
    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.m {
            return Err(Error::validation(format!(
                "surrogate has {} parameters, got {}",
                self.m,
                theta.len()
            )));
        }
        Ok(self.coeffs.iter().map(|(a, c)| c * a.monomial(theta)).sum())
    }

    /// Error bound at `theta` from the recorded one-norm.
    pub fn error_bound(&self, theta: &[f64]) -> Option<f64> {
        self.one_norm
            .map(|n| taylor_error_bound(n, self.order, theta))
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        let file = TaylorFile {
            kind: FORMAT.to_string(),
            m: self.m,
            order: self.order,
            one_norm: self.one_norm,
            coeffs: self
                .coeffs
                .iter()
                .map(|(a, c)| CoeffEntry {
                    alpha: a.clone(),
                    value: *c,
                })
                .collect(),
        };
        serde_json::to_writer_pretty(writer, &file)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let file: TaylorFile = serde_json::from_reader(reader)?;
        Self::from_file(file)
    }

    fn from_file(file: TaylorFile) -> Result<Self> {
        if file.kind != FORMAT {
            return Err(Error::validation(format!(
                "expected kind {FORMAT:?}, got {:?}",
                file.kind
            )));
        }
        if file.order > MAX_ORDER {
            return Err(Error::validation(format!(
                "order {} exceeds {MAX_ORDER}",
                file.order
            )));
        }
        let mut given: HashMap<MultiIndex, f64> = HashMap::with_capacity(file.coeffs.len());
        for entry in file.coeffs {
            if entry.alpha.dim() != file.m || entry.alpha.order() > file.order {
                return Err(Error::validation(format!(
                    "coefficient key {:?} is not a multiindex of dimension {} and order ≤ {}",
                    entry.alpha.entries(),
                    file.m,
                    file.order
                )));
            }
            if given.insert(entry.alpha, entry.value).is_some() {
                return Err(Error::validation("duplicate coefficient key"));
            }
        }
        let coeffs = enumerate_multiindices(file.m, file.order)
            .into_iter()
            .map(|a| match given.get(&a) {
                Some(&c) => Ok((a, c)),
                None => Err(Error::validation(format!(
                    "missing coefficient for {:?}",
                    a.entries()
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m: file.m,
            order: file.order,
            coeffs,
            one_norm: file.one_norm,
        })
    }
}

impl Objective for TaylorSurrogate {
    fn num_params(&self) -> usize {
        self.m
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        self.eval(theta)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TaylorFile {
    kind: String,
    m: usize,
    #[serde(rename = "L")]
    order: usize,
    one_norm: Option<f64>,
    coeffs: Vec<CoeffEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoeffEntry {
    alpha: MultiIndex,
    value: f64,
}

/// `Σ_{k>L} r^k/k!`, i.e. `exp(r) - Σ_{k≤L} r^k/k!` without cancellation.
fn exp_tail(r: f64, order: usize) -> f64 {
    let mut term = 1.0;
    for k in 1..=order + 1 {
        term *= r / k as f64;
    }
    let mut sum = 0.0;
    let mut k = order + 1;
    loop {
        sum += term;
        k += 1;
        term *= r / k as f64;
        if !sum.is_finite() || (term <= sum * 1e-17 && k as f64 > r) || term == 0.0 {
            return sum;
        }
    }
}

/// Bound on `|f̃(θ) - f(θ)|` for the order-`L` Taylor surrogate:
/// `(Σ|a|)(exp(‖θ‖₁) - Σ_{k≤L} ‖θ‖₁^k/k!)`, tightened to
/// `2(Σ|a|)‖θ‖₁^{L+1}/(L+1)!` when `‖θ‖₁ ≤ 1 + L/2`.
pub fn taylor_error_bound(one_norm: f64, order: usize, theta: &[f64]) -> f64 {
    let r: f64 = theta.iter().map(|t| t.abs()).sum();
    if r == 0.0 {
        return 0.0;
    }
    let general = one_norm * exp_tail(r, order);
    if r <= 1.0 + order as f64 / 2.0 {
        let sharp = 2.0 * one_norm * r.powi(order as i32 + 1) / factorial(order + 1) as f64;
        general.min(sharp)
    } else {
        general
    }
}

/// `⌊4^L m^L / L!⌋`, the most distinct grid points the Taylor build samples
/// when `L ≤ m`. Saturates at `u128::MAX`.
pub fn sample_count_bound_taylor(m: usize, order: usize) -> u128 {
    let numerator = (0..order).try_fold(1u128, |acc, _| acc.checked_mul(4 * m as u128));
    match numerator {
        Some(n) => n / u128::from(factorial(order)),
        None => u128::MAX,
    }
}
