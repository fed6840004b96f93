//! Banded matrices and their LU factorization.
//!
//! Every operator in this crate is a 3-point or 5-point stencil with a
//! lexicographic node ordering, so the lower and upper bandwidths are at most
//! the number of nodes per row of the grid. A banded LU with partial pivoting
//! keeps fill-in inside `kl + (kl + ku)` and is exact (direct) for the sizes we
//! use.

use crate::error::{Error, Result};

/// Square matrix with `kl` sub-diagonals and `ku` super-diagonals.
///
/// Row `i` stores the columns `i - kl ..= i + kl + ku`; the extra `kl`
/// super-diagonals are reserved for the fill-in of pivoted elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.kl + self.ku {
            return None;
        }
        Some(i * self.width + (j + self.kl - i))
    }

    /// Entry `(i, j)`; zero outside the stored band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `value` to entry `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` lies outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = i * self.width + (j + self.kl - i);
        self.data[s] += value;
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku);
        let s = i * self.width + (j + self.kl - i);
        self.data[s] = value;
    }

    /// Returns `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            let hi = (i + self.ku).min(self.n - 1);
            (i..=hi).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol)
        })
    }
}

/// Pivot selection for [`BandLu::factor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pivoting {
    /// Partial (row) pivoting; works for any nonsingular banded matrix.
    Partial,
    /// No pivoting. For a symmetric matrix the pivots are the `D` of its
    /// `LDLᵀ` factorization, so their signs certify positive definiteness.
    None,
}

/// LU factorization of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    perm: Vec<usize>,
    min_pivot: f64,
    max_pivot: f64,
    first_nonpositive: Option<(usize, f64)>,
}

impl BandLu {
    /// Factorizes `a`. Fails with [`Error::Singular`] when a pivot vanishes
    /// (relative to the matrix scale).
    pub fn factor(a: &BandMatrix, pivoting: Pivoting) -> Result<Self> {
        let n = a.n;
        let kl = a.kl;
        let reach = kl + a.ku;
        let mut lu = a.clone();
        let mut perm = vec![0usize; n];
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;
        let mut first_nonpositive = None;
        let scale = a.norm_inf().max(f64::MIN_POSITIVE);

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            if pivoting == Pivoting::Partial {
                let mut best = lu.get(k, k).abs();
                for i in (k + 1)..=last_row {
                    let v = lu.get(i, k).abs();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
            }
            perm[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let sk = lu.slot(k, j).expect("band slot");
                    let sp = lu.slot(p, j).expect("band slot");
                    lu.data.swap(sk, sp);
                }
            }
            let pivot = lu.get(k, k);
            if first_nonpositive.is_none() && pivot <= 0.0 {
                first_nonpositive = Some((k, pivot));
            }
            min_pivot = min_pivot.min(pivot.abs());
            max_pivot = max_pivot.max(pivot.abs());
            if pivot.abs() <= f64::EPSILON * 1e-4 * scale || !pivot.is_finite() {
                return Err(Error::Singular {
                    min_pivot: pivot.abs(),
                    condition: f64::INFINITY,
                });
            }
            for i in (k + 1)..=last_row {
                let si = lu.slot(i, k).expect("band slot");
                let factor = lu.data[si] / pivot;
                if factor == 0.0 {
                    continue;
                }
                lu.data[si] = factor;
                for j in (k + 1)..=last_col {
                    let skj = lu.get(k, j);
                    if skj != 0.0 {
                        let sij = lu.slot(i, j).expect("band slot");
                        lu.data[sij] -= factor * skj;
                    }
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            min_pivot,
            max_pivot,
            first_nonpositive,
        })
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Ratio of largest to smallest pivot magnitude; a cheap lower bound on
    /// the condition number.
    pub fn condition_estimate(&self) -> f64 {
        self.max_pivot / self.min_pivot
    }

    /// First pivot that is not strictly positive, as `(row, value)`.
    pub fn first_nonpositive_pivot(&self) -> Option<(usize, f64)> {
        self.first_nonpositive
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        let kl = self.lu.kl;
        let reach = kl + self.lu.ku;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.perm[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in (k + 1)..=(k + kl).min(n - 1) {
                    x[i] -= self.lu.get(i, k) * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in (k + 1)..=(k + reach).min(n - 1) {
                s -= self.lu.get(k, j) * x[j];
            }
            x[k] = s / self.lu.get(k, k);
        }
        x
    }
}

/// Solves `a x = b` with one step of iterative refinement.
pub fn solve_banded(a: &BandMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu = BandLu::factor(a, Pivoting::Partial)?;
    let mut x = lu.solve(b);
    let r: Vec<f64> = a.mul_vec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
    let dx = lu.solve(&r);
    for (xi, d) in x.iter_mut().zip(dx) {
        *xi += d;
    }
    Ok(x)
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| dot(row, x)).collect()
    }

    #[test]
    fn pivoted_solve_matches_dense_product() {
        // Nonsymmetric with a zero leading entry so pivoting is mandatory.
        let n = 7;
        let (kl, ku) = (2, 1);
        let mut a = BandMatrix::zeros(n, kl, ku);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let v = if i == j && i == 0 {
                    0.0
                } else {
                    1.0 + ((3 * i + 5 * j) % 7) as f64 - 2.5
                };
                a.set(i, j, v);
                dense[i][j] = v;
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.3).collect();
        let b = dense_mul(&dense, &x_true);
        let x = solve_banded(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12, "{xi} vs {ti}");
        }
    }

    #[test]
    fn unpivoted_factor_reports_indefinite_pivot() {
        let n = 5;
        let mut a = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            a.set(i, i, 2.0 - 3.5);
            if i + 1 < n {
                a.set(i, i + 1, -1.0);
                a.set(i + 1, i, -1.0);
            }
        }
        let lu = BandLu::factor(&a, Pivoting::None).unwrap();
        assert!(lu.first_nonpositive_pivot().is_some());
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.set(0, 0, 1.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 1.0);
        a.set(2, 2, 1.0);
        assert!(matches!(
            BandLu::factor(&a, Pivoting::Partial),
            Err(Error::Singular { .. })
        ));
    }
}
