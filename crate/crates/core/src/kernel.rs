//! Trigonometric interpolation surrogate.
//!
//! `H` is the space of real functions `Σ_{ω∈{-1,0,1}ᵐ} c_ω e^{iωᵀθ}` with the
//! `L²([-π,π]ᵐ)` inner product. Its reproducing kernel is
//! `K(x,z) = (2π)^{-m} Π_j (1 + 2cos(x_j - z_j))`. The surrogate samples `f`
//! on the nodes `(π/2){-1,0,1}ᵐ ∩ 𝓘_L` (points with at most `L` non-zero
//! coordinates), solves the Gram system `(K(p_i,p_j))·η = (f(p_i))` and
//! returns `θ ↦ Σ η_i K(p_i, θ)`.
//!
//! Computations use the rescaled kernel `K̃ = ((2π)/3)^m K`, whose values lie
//! in `[-1, 1]` for every `m`; the rescaling is absorbed by `η`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, PackedSymmetric, PivotPolicy};
use crate::multiindex::binomial;
use crate::oracle::{centered_angle, EvaluationCache, GridPoint, Objective};

pub const FORMAT: &str = "kernel-v1";

/// Relative pivot threshold of the Gram factorization.
pub const PIVOT_REL_TOL: f64 = 1e-12;

/// Required `‖Gη - y‖∞ / max(1, ‖y‖∞)` after the solve.
pub const RESIDUAL_REL_TOL: f64 = 1e-8;

const REFINEMENT_STEPS: usize = 3;

/// `(1 + 2cos(Δ))/3` for `Δ = r·π/2`, `r = 0..4`, exactly.
const LATTICE_FACTOR: [f64; 4] = [1.0, 1.0 / 3.0, -1.0 / 3.0, 1.0 / 3.0];

fn check_lengths(x: &[f64], z: &[f64]) -> Result<()> {
    if x.len() != z.len() {
        return Err(Error::validation(format!(
            "kernel arguments have lengths {} and {}",
            x.len(),
            z.len()
        )));
    }
    Ok(())
}

/// `K̃(x,z) = Π_j (1 + 2cos(x_j - z_j))/3`.
pub fn kernel_scaled(x: &[f64], z: &[f64]) -> Result<f64> {
    check_lengths(x, z)?;
    Ok(x.iter()
        .zip(z)
        .map(|(a, b)| (1.0 + 2.0 * (a - b).cos()) / 3.0)
        .product())
}

/// `K(x,z) = (2π)^{-m} Π_j (1 + 2cos(x_j - z_j))`.
///
/// The prefactor underflows towards zero as `m` grows; prefer
/// [`kernel_scaled`] outside small test problems.
pub fn kernel_unscaled(x: &[f64], z: &[f64]) -> Result<f64> {
    check_lengths(x, z)?;
    Ok(x.iter()
        .zip(z)
        .map(|(a, b)| (1.0 + 2.0 * (a - b).cos()) / (2.0 * PI))
        .product())
}

/// `K̃(p, q)` for two grid points, from residue differences.
pub fn lattice_kernel_scaled(p: &GridPoint, q: &GridPoint) -> f64 {
    p.residues()
        .iter()
        .zip(q.residues())
        .map(|(a, b)| LATTICE_FACTOR[usize::from((4 + a - b) % 4)])
        .product()
}

/// Which kernel normalization the coefficients refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelScaling {
    /// `K̃ = Π (1 + 2cos)/3`.
    #[serde(rename = "ktilde")]
    Scaled,
    /// `K = (2π)^{-m} Π (1 + 2cos)`.
    #[serde(rename = "k")]
    Unscaled,
}

impl KernelScaling {
    /// Factor `c` with `kernel = c^m · K̃`.
    fn per_coordinate(self) -> f64 {
        match self {
            KernelScaling::Scaled => 1.0,
            KernelScaling::Unscaled => 3.0 / (2.0 * PI),
        }
    }
}

/// `D = Σ_{k≤L} C(m,k) 2^k`.
pub fn node_count(m: usize, order: usize) -> u128 {
    (0..=order.min(m)).map(|k| binomial(m, k) << k).sum()
}

/// `⌊3^L m^L / L!⌋`, the sampling bound for the kernel build.
pub fn sample_count_bound_kernel(m: usize, order: usize) -> u128 {
    let numerator = (0..order).try_fold(1u128, |acc, _| acc.checked_mul(3 * m as u128));
    match numerator {
        Some(n) => n / (1..=order as u128).product::<u128>(),
        None => u128::MAX,
    }
}

/// The nodes `(π/2){-1,0,1}ᵐ ∩ 𝓘_L` ordered by support size, then support
/// positions (lexicographic), then sign pattern (`-π/2` before `+π/2`, first
/// support position most significant). `-π/2` is stored as residue 3.
pub fn grid_nodes(m: usize, order: usize) -> Result<Vec<GridPoint>> {
    if order > m {
        return Err(Error::validation(format!(
            "order {order} exceeds the parameter count {m}"
        )));
    }
    let capacity = usize::try_from(node_count(m, order))
        .map_err(|_| Error::Size(format!("node set for m={m}, L={order} is too large")))?;
    let mut nodes = Vec::with_capacity(capacity);
    for size in 0..=order {
        let mut support: Vec<usize> = (0..size).collect();
        loop {
            for code in 0u64..1 << size {
                let mut residues = vec![0u8; m];
                for (t, &pos) in support.iter().enumerate() {
                    residues[pos] = if code >> (size - 1 - t) & 1 == 1 {
                        1
                    } else {
                        3
                    };
                }
                nodes.push(GridPoint::from_residues(residues)?);
            }
            if !next_combination(&mut support, m) {
                break;
            }
        }
    }
    Ok(nodes)
}

/// Advances `c` to the next `|c|`-subset of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Diagnostics of a Gram solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitReport {
    pub nodes: usize,
    /// Number of nodes kept by the factorization.
    pub rank: usize,
    pub min_pivot: f64,
    /// Whether the strict factorization failed and dependent nodes were dropped.
    pub semidefinite_fallback: bool,
    /// `‖Gη - y‖∞`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSurrogate {
    m: usize,
    order: usize,
    scaling: KernelScaling,
    nodes: Vec<GridPoint>,
    eta: Vec<f64>,
}

/// Algorithm entry point: samples `f` on [`grid_nodes`] and solves the Gram
/// system with the rescaled kernel.
pub fn build_kernel_surrogate<F: Objective + ?Sized>(
    objective: &F,
    order: usize,
    cache: &mut EvaluationCache,
) -> Result<KernelSurrogate> {
    let nodes = grid_nodes(objective.num_params(), order)?;
    KernelSurrogate::fit(objective, nodes, order, KernelScaling::Scaled, cache).map(|(s, _)| s)
}

impl KernelSurrogate {
    /// Interpolates `objective` on an arbitrary set of distinct grid points.
    ///
    /// The Gram matrix is positive semidefinite for every node set. When the
    /// strict Cholesky factorization fails (nodes whose kernel sections are
    /// linearly dependent), the solve drops dependent nodes instead; any
    /// solution of the consistent system gives the same interpolant.
    pub fn fit<F: Objective + ?Sized>(
        objective: &F,
        nodes: Vec<GridPoint>,
        order: usize,
        scaling: KernelScaling,
        cache: &mut EvaluationCache,
    ) -> Result<(Self, FitReport)> {
        let m = objective.num_params();
        if nodes.is_empty() {
            return Err(Error::validation("node set is empty"));
        }
        if let Some(p) = nodes.iter().find(|p| p.dim() != m) {
            return Err(Error::validation(format!(
                "node of dimension {} for an objective with {m} parameters",
                p.dim()
            )));
        }
        let mut seen = HashSet::with_capacity(nodes.len());
        if let Some(p) = nodes.iter().find(|p| !seen.insert(*p)) {
            return Err(Error::validation(format!(
                "duplicate node {:?}",
                p.residues()
            )));
        }

        let exec = cache.exec();
        cache.prefetch(objective, &nodes)?;
        let y = nodes
            .iter()
            .map(|p| cache.oracle_eval(objective, p))
            .collect::<Result<Vec<f64>>>()?;

        let scale = scaling.per_coordinate().powi(m as i32);
        let gram = PackedSymmetric::from_fn(nodes.len(), exec, |i, j| {
            scale * lattice_kernel_scaled(&nodes[i], &nodes[j])
        });

        let (chol, fallback) = match Cholesky::factor(
            gram.clone(),
            PIVOT_REL_TOL,
            PivotPolicy::Strict,
            exec,
        ) {
            Ok(c) => (c, false),
            Err(Error::Numeric { pivot, .. }) => {
                log::warn!(
                    "Gram matrix of {} nodes is ill-conditioned (pivot {pivot:e}); dropping dependent nodes",
                    nodes.len()
                );
                let c = Cholesky::factor(
                    gram.clone(),
                    PIVOT_REL_TOL,
                    PivotPolicy::DropDependent,
                    exec,
                )?;
                (c, true)
            }
            Err(e) => return Err(e),
        };

        let y_max = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = RESIDUAL_REL_TOL * y_max.max(1.0);
        let mut eta = chol.solve(&y);
        let mut residual_vec = residual(&gram, &eta, &y);
        let mut res = max_abs(&residual_vec);
        for _ in 0..REFINEMENT_STEPS {
            if res <= tol {
                break;
            }
            let delta = chol.solve(&residual_vec);
            for (e, d) in eta.iter_mut().zip(&delta) {
                *e += d;
            }
            residual_vec = residual(&gram, &eta, &y);
            res = max_abs(&residual_vec);
        }
        if res.is_nan() || res > tol {
            return Err(Error::Numeric {
                msg: format!("Gram solve residual {res:e} exceeds {tol:e}"),
                pivot: chol.min_pivot(),
            });
        }

        let report = FitReport {
            nodes: nodes.len(),
            rank: chol.rank(),
            min_pivot: chol.min_pivot(),
            semidefinite_fallback: fallback,
            residual: res,
        };
        Ok((
            Self {
                m,
                order,
                scaling,
                nodes,
                eta,
            },
            report,
        ))
    }

    /// The expansion `Σ η_i K(p_i, ·)` for given nodes and coefficients.
    pub fn from_parts(
        m: usize,
        order: usize,
        scaling: KernelScaling,
        nodes: Vec<GridPoint>,
        eta: Vec<f64>,
    ) -> Result<Self> {
        if nodes.len() != eta.len() {
            return Err(Error::validation(format!(
                "{} nodes but {} coefficients",
                nodes.len(),
                eta.len()
            )));
        }
        if nodes.iter().any(|p| p.dim() != m) {
            return Err(Error::validation(format!(
                "node dimension differs from {m}"
            )));
        }
        Ok(Self {
            m,
            order,
            scaling,
            nodes,
            eta,
        })
    }

    pub fn num_params(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn scaling(&self) -> KernelScaling {
        self.scaling
    }

    pub fn nodes(&self) -> &[GridPoint] {
        &self.nodes
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// `Σ_i η_i K(p_i, θ)` in node order.
    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.m {
            return Err(Error::validation(format!(
                "surrogate has {} parameters, got {}",
                self.m,
                theta.len()
            )));
        }
        let denom = match self.scaling {
            KernelScaling::Scaled => 3.0,
            KernelScaling::Unscaled => 2.0 * PI,
        };
        // per-coordinate factor for each of the four node residues
        let table: Vec<[f64; 4]> = theta
            .iter()
            .map(|&t| [0u8, 1, 2, 3].map(|r| (1.0 + 2.0 * (centered_angle(r) - t).cos()) / denom))
            .collect();
        Ok(self
            .nodes
            .iter()
            .zip(&self.eta)
            .map(|(p, eta)| {
                let k: f64 = p
                    .residues()
                    .iter()
                    .zip(&table)
                    .map(|(&r, row)| row[usize::from(r)])
                    .product();
                eta * k
            })
            .sum())
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        let file = KernelFile {
            kind: FORMAT.to_string(),
            m: self.m,
            order: self.order,
            scaling: self.scaling,
            nodes: self.nodes.iter().map(|p| p.residues().to_vec()).collect(),
            eta: self.eta.clone(),
        };
        serde_json::to_writer_pretty(writer, &file)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let file: KernelFile = serde_json::from_reader(reader)?;
        if file.kind != FORMAT {
            return Err(Error::validation(format!(
                "expected kind {FORMAT:?}, got {:?}",
                file.kind
            )));
        }
        if file.nodes.len() != file.eta.len() {
            return Err(Error::validation(format!(
                "{} nodes but {} coefficients",
                file.nodes.len(),
                file.eta.len()
            )));
        }
        let nodes = file
            .nodes
            .into_iter()
            .map(GridPoint::from_residues)
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(file.m, file.order, file.scaling, nodes, file.eta)
    }
}

impl Objective for KernelSurrogate {
    fn num_params(&self) -> usize {
        self.m
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        self.eval(theta)
    }
}

fn residual(gram: &PackedSymmetric, eta: &[f64], y: &[f64]) -> Vec<f64> {
    gram.mul_vec(eta)
        .iter()
        .zip(y)
        .map(|(g, y)| y - g)
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

#[derive(Debug, Serialize, Deserialize)]
struct KernelFile {
    kind: String,
    m: usize,
    #[serde(rename = "L")]
    order: usize,
    scaling: KernelScaling,
    nodes: Vec<Vec<u8>>,
    eta: Vec<f64>,
}
