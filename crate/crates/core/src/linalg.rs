//! Blocked Cholesky factorization of symmetric matrices stored as packed
//! lower-triangular rows.

use crate::error::{Error, Result};
use crate::exec::Exec;

const BLOCK: usize = 64;

/// Lower triangle of a symmetric `n × n` matrix, row `i` holding columns
/// `0..=i` contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedSymmetric {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl PackedSymmetric {
    /// Fills entry `(i, j)`, `j ≤ i`, from `entry(i, j)`.
    pub fn from_fn<F>(n: usize, exec: Exec, entry: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync + Send,
    {
        let mut data = vec![0.0; row_start(n)];
        let mut rows = split_rows_from(&mut data, 0, n);
        exec.for_each_mut(&mut rows, |i, row| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = entry(i, j);
            }
        });
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        self.data[row_start(i) + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[row_start(i)..row_start(i + 1)]
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }

    /// `A x` using both triangles.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = self.row(i);
            y[i] += dot(&row[..i], &x[..i]) + row[i] * x[i];
            for j in 0..i {
                y[j] += row[j] * x[i];
            }
        }
        y
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (ra, rb) = (chunks_a.remainder(), chunks_b.remainder());
    for (x, y) in chunks_a.zip(chunks_b) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// What to do with a pivot below the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotPolicy {
    /// Fail with [`Error::Numeric`].
    Strict,
    /// Treat the column as linearly dependent on the earlier ones: it gets a
    /// zero column in the factor and a zero entry in every solution. For a
    /// positive semidefinite matrix and a consistent right-hand side this
    /// yields a solution of the full system.
    DropDependent,
}

#[derive(Debug, Clone)]
pub struct Cholesky {
    factor: PackedSymmetric,
    dropped: Vec<bool>,
    min_pivot: f64,
}

impl Cholesky {
    /// Factors `a = L Lᵀ` in place. A pivot (Schur-complement diagonal) `d`
    /// is rejected when `d ≤ rel_tol · max_i a_ii`.
    pub fn factor(
        mut a: PackedSymmetric,
        rel_tol: f64,
        policy: PivotPolicy,
        exec: Exec,
    ) -> Result<Self> {
        let n = a.n;
        let threshold = rel_tol * a.max_diagonal();
        let mut dropped = vec![false; n];
        let mut min_pivot = f64::INFINITY;

        for kb in (0..n).step_by(BLOCK) {
            let ke = (kb + BLOCK).min(n);

            // diagonal block, row by row
            for i in kb..ke {
                for j in kb..=i {
                    let (ri, rj) = (row_start(i), row_start(j));
                    let s =
                        a.data[ri + j] - dot(&a.data[ri + kb..ri + j], &a.data[rj + kb..rj + j]);
                    if i == j {
                        min_pivot = min_pivot.min(s);
                        if s.is_nan() || s <= threshold {
                            match policy {
                                PivotPolicy::Strict => {
                                    return Err(Error::Numeric {
                                        msg: format!("Gram matrix is not numerically positive definite at row {i}"),
                                        pivot: s,
                                    })
                                }
                                PivotPolicy::DropDependent => {
                                    dropped[i] = true;
                                    a.data[ri + i] = 0.0;
                                }
                            }
                        } else {
                            a.data[ri + i] = s.sqrt();
                        }
                    } else {
                        a.data[ri + j] = if dropped[j] { 0.0 } else { s / a.data[rj + j] };
                    }
                }
            }
            if ke == n {
                break;
            }

            // panel below the diagonal block
            let (head, tail) = a.data.split_at_mut(row_start(ke));
            let head: &[f64] = head;
            let dropped_ref = &dropped;
            let mut rows = split_rows_from(tail, ke, n);
            exec.for_each_mut(&mut rows, |_, row| {
                for j in kb..ke {
                    let rj = row_start(j);
                    if dropped_ref[j] {
                        row[j] = 0.0;
                        continue;
                    }
                    let s = row[j] - dot(&row[kb..j], &head[rj + kb..rj + j]);
                    row[j] = s / head[rj + j];
                }
            });

            // trailing update A[i][j] -= L[i][kb..ke]·L[j][kb..ke] for ke ≤ j ≤ i
            let width = ke - kb;
            let mut panel = vec![0.0; (n - ke) * width];
            for (r, row) in rows.iter().enumerate() {
                panel[r * width..(r + 1) * width].copy_from_slice(&row[kb..ke]);
            }
            let panel = &panel;
            exec.for_each_mut(&mut rows, |r, row| {
                let li = &panel[r * width..(r + 1) * width];
                for (c, v) in row[ke..].iter_mut().enumerate() {
                    *v -= dot(li, &panel[c * width..(c + 1) * width]);
                }
            });
        }

        Ok(Self {
            factor: a,
            dropped,
            min_pivot,
        })
    }

    /// Smallest Schur-complement diagonal encountered.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn rank(&self) -> usize {
        self.dropped.iter().filter(|d| !**d).count()
    }

    pub fn dropped(&self) -> &[bool] {
        &self.dropped
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.factor.n;
        assert_eq!(b.len(), n, "right-hand side has wrong length");
        let mut z = vec![0.0; n];
        for i in 0..n {
            if self.dropped[i] {
                continue;
            }
            let row = self.factor.row(i);
            z[i] = (b[i] - dot(&row[..i], &z[..i])) / row[i];
        }
        for i in (0..n).rev() {
            if self.dropped[i] {
                z[i] = 0.0;
                continue;
            }
            let row = self.factor.row(i);
            z[i] /= row[i];
            let xi = z[i];
            for (zk, lk) in z[..i].iter_mut().zip(&row[..i]) {
                *zk -= lk * xi;
            }
        }
        z
    }
}

/// Mutable slices for packed rows `first..last`, where `tail` starts at row
/// `first`.
fn split_rows_from(tail: &mut [f64], first: usize, last: usize) -> Vec<&mut [f64]> {
    let mut rows = Vec::with_capacity(last - first);
    let mut rest = tail;
    for i in first..last {
        let (row, t) = rest.split_at_mut(i + 1);
        rows.push(row);
        rest = t;
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> (PackedSymmetric, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                dense[i][j] =
                    (0..n).map(|k| b[i][k] * b[j][k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 };
            }
        }
        let d2 = dense.clone();
        (
            PackedSymmetric::from_fn(n, Exec::Sequential, move |i, j| d2[i][j]),
            dense,
        )
    }

    #[test]
    fn solves_spd_across_block_boundaries() {
        for &n in &[1usize, 5, 64, 65, 150] {
            let (a, dense) = random_spd(n, n as u64);
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let b: Vec<f64> = dense
                .iter()
                .map(|r| r.iter().zip(&x_true).map(|(a, x)| a * x).sum())
                .collect();
            let chol =
                Cholesky::factor(a.clone(), 1e-12, PivotPolicy::Strict, Exec::Sequential).unwrap();
            let x = chol.solve(&b);
            let r = a.mul_vec(&x);
            for (ri, bi) in r.iter().zip(&b) {
                assert!((ri - bi).abs() < 1e-9 * (1.0 + bi.abs()), "n={n}");
            }
            assert_eq!(chol.rank(), n);
        }
    }

    #[test]
    fn parallel_and_sequential_factors_agree_bitwise() {
        let (a, _) = random_spd(130, 7);
        let b: Vec<f64> = (0..130).map(|i| i as f64).collect();
        let s = Cholesky::factor(a.clone(), 1e-12, PivotPolicy::Strict, Exec::Sequential)
            .unwrap()
            .solve(&b);
        let p = Cholesky::factor(a, 1e-12, PivotPolicy::Strict, Exec::Parallel)
            .unwrap()
            .solve(&b);
        assert_eq!(s, p);
    }

    #[test]
    fn strict_rejects_singular_and_drop_recovers() {
        // rank-2 PSD matrix v vᵀ + w wᵀ in 3 dimensions
        let v = [1.0, 2.0, 3.0];
        let w = [0.0, 1.0, 1.0];
        let a = PackedSymmetric::from_fn(3, Exec::Sequential, |i, j| v[i] * v[j] + w[i] * w[j]);
        let err =
            Cholesky::factor(a.clone(), 1e-12, PivotPolicy::Strict, Exec::Sequential).unwrap_err();
        assert!(matches!(err, Error::Numeric { .. }));

        let chol = Cholesky::factor(
            a.clone(),
            1e-12,
            PivotPolicy::DropDependent,
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(chol.rank(), 2);
        assert_eq!(chol.dropped(), &[false, false, true]);
        // consistent right-hand side: A·(1, -1, 2)
        let b = a.mul_vec(&[1.0, -1.0, 2.0]);
        let x = chol.solve(&b);
        for (ri, bi) in a.mul_vec(&x).iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }
}
