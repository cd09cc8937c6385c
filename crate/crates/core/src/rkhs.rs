//! The space `H = span{e^{iωᵀθ} : ω ∈ {-1,0,1}ᵐ}` as a reproducing kernel
//! Hilbert space, used as a reference for the interpolation surrogate.
//!
//! Every `g ∈ H` is determined by its values on the lattice `(π/2)Sᵐ`,
//! `S = {0,1,2,3}`: `g = (π/2)ᵐ Σ_p g(p) K_p`, and
//! `⟨g,h⟩_H = ∫_{[-π,π]ᵐ} g h = (π/2)ᵐ Σ_p g(p) h(p)` because the 4-point
//! rule is exact for frequencies below 4.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::kernel::kernel_unscaled;
use crate::oracle::{GridPoint, Objective};

/// Largest dimension for which the `4ᵐ` lattice is enumerated.
pub const MAX_LATTICE_DIM: usize = 6;

/// `(π/2)Sᵐ` as grid points, residues in base-4 counting order.
pub fn full_lattice(m: usize) -> Result<Vec<GridPoint>> {
    if m > MAX_LATTICE_DIM {
        return Err(Error::Size(format!(
            "lattice of dimension {m} exceeds {MAX_LATTICE_DIM}"
        )));
    }
    Ok((0..1usize << (2 * m))
        .map(|code| {
            let residues = (0..m).map(|j| (code >> (2 * j) & 3) as u8).collect();
            GridPoint::from_residues(residues).expect("residues below 4")
        })
        .collect())
}

/// `H` in dimension `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelSpace {
    m: usize,
}

impl KernelSpace {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::validation("dimension must be at least 1"));
        }
        if m > MAX_LATTICE_DIM {
            return Err(Error::Size(format!(
                "dimension {m} exceeds {MAX_LATTICE_DIM}"
            )));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// `⟨g, h⟩_H` for `g, h ∈ H` (not checked).
    pub fn inner_product<G, F>(&self, g: &G, h: &F) -> Result<f64>
    where
        G: Objective + ?Sized,
        F: Objective + ?Sized,
    {
        self.check(g.num_params())?;
        self.check(h.num_params())?;
        let mut sum = 0.0;
        for p in full_lattice(self.m)? {
            let x = p.to_angles();
            sum += g.value(&x)? * h.value(&x)?;
        }
        Ok(FRAC_PI_2.powi(self.m as i32) * sum)
    }

    pub fn norm<G: Objective + ?Sized>(&self, g: &G) -> Result<f64> {
        Ok(self.inner_product(g, g)?.max(0.0).sqrt())
    }

    fn check(&self, m: usize) -> Result<()> {
        if m != self.m {
            return Err(Error::validation(format!(
                "function of {m} parameters in a space of dimension {}",
                self.m
            )));
        }
        Ok(())
    }
}

/// `θ ↦ (π/2)ᵐ Σ_{p∈(π/2)Sᵐ} f(p) K(p, θ)`, which equals `f` whenever `f ∈ H`.
#[derive(Debug, Clone)]
pub struct ExactReconstruction {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

/// Samples `f` on the full `4ᵐ` lattice, `m ≤ 3`.
pub fn reconstruct_exact<F: Objective + ?Sized>(objective: &F) -> Result<ExactReconstruction> {
    let m = objective.num_params();
    if m > 3 {
        return Err(Error::Size(format!(
            "exact reconstruction needs m ≤ 3, got {m}"
        )));
    }
    let lattice = full_lattice(m)?;
    let values = lattice
        .iter()
        .map(|p| objective.value_at(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExactReconstruction {
        points: lattice.iter().map(GridPoint::to_angles).collect(),
        values,
    })
}

impl ExactReconstruction {
    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        let m = self.points[0].len();
        let mut sum = 0.0;
        for (p, v) in self.points.iter().zip(&self.values) {
            sum += v * kernel_unscaled(p, theta)?;
        }
        Ok(FRAC_PI_2.powi(m as i32) * sum)
    }
}

impl Objective for ExactReconstruction {
    fn num_params(&self) -> usize {
        self.points[0].len()
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        self.eval(theta)
    }
}

/// Both sides of `K_{(…,π,…)} = K_{(…,π/2,…)} + K_{(…,-π/2,…)} - K_{(…,0,…)}`,
/// the identity that keeps `π` entries out of the node set.
#[derive(Debug, Clone)]
pub struct PiNodeReduction {
    base: Vec<f64>,
    coordinate: usize,
}

/// `base` must have exactly one residue equal to 2.
pub fn pi_node_reduction_check(base: &GridPoint) -> Result<PiNodeReduction> {
    let twos: Vec<usize> = (0..base.dim())
        .filter(|&j| base.residues()[j] == 2)
        .collect();
    if twos.len() != 1 {
        return Err(Error::validation(format!(
            "expected exactly one π entry, found {}",
            twos.len()
        )));
    }
    Ok(PiNodeReduction {
        base: base.to_centered_angles(),
        coordinate: twos[0],
    })
}

impl PiNodeReduction {
    /// `K(p, θ)`.
    pub fn lhs(&self, theta: &[f64]) -> Result<f64> {
        kernel_unscaled(&self.base, theta)
    }

    /// `K(p₊, θ) + K(p₋, θ) - K(p₀, θ)` with the π entry replaced.
    pub fn rhs(&self, theta: &[f64]) -> Result<f64> {
        let with = |angle: f64| {
            let mut p = self.base.clone();
            p[self.coordinate] = angle;
            kernel_unscaled(&p, theta)
        };
        Ok(with(FRAC_PI_2)? + with(-FRAC_PI_2)? - with(0.0)?)
    }
}
