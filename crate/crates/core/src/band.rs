//! Symmetric banded matrices with an in-place Cholesky factorization.
//!
//! The Crank–Nicolson system matrix and the clamped bilaplacian are
//! symmetric positive definite with half-bandwidth `2 * n1`, so a banded
//! `L Lᵀ` factorization is the natural direct solver at this scale.

use crate::error::{Error, Result};

/// Symmetric banded matrix stored by diagonals: `diag[d][i] = A[i, i + d]`
/// for `d = 0..=bw` (upper triangle).
#[derive(Debug, Clone)]
pub struct BandMatrix {
    pub n: usize,
    pub bw: usize,
    diags: Vec<Vec<f64>>,
}

impl BandMatrix {
    pub fn new(n: usize, bw: usize) -> Self {
        let diags = (0..=bw).map(|d| vec![0.0; n.saturating_sub(d)]).collect();
        BandMatrix { n, bw, diags }
    }

    /// Accumulate `A[i, j] += v`. Only the upper triangle is stored;
    /// lower-triangle calls are dropped, so a symmetric assembly that visits
    /// the full stencil of every row deposits each unordered pair exactly
    /// once.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if i > j {
            return;
        }
        let d = j - i;
        assert!(d <= self.bw, "entry ({i},{j}) outside bandwidth {}", self.bw);
        self.diags[d][i] += v;
    }

    /// Multiply every stored entry by `c`.
    pub fn scale(&mut self, c: f64) {
        for d in self.diags.iter_mut() {
            for v in d.iter_mut() {
                *v *= c;
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bw {
            0.0
        } else {
            self.diags[d][lo]
        }
    }

    /// `y = A x` for the full symmetric matrix.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = self.diags[0][i] * x[i];
            for d in 1..=self.bw {
                if i + d < self.n {
                    acc += self.diags[d][i] * x[i + d];
                }
                if i >= d {
                    acc += self.diags[d][i - d] * x[i - d];
                }
            }
            y[i] = acc;
        }
        y
    }

    /// Banded Cholesky `A = L Lᵀ`. Fails on non-positive pivots.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let n = self.n;
        let bw = self.bw;
        // l[d][i] = L[i + d, i] for d = 0..=bw (column-major bands of L)
        let mut l: Vec<Vec<f64>> = (0..=bw).map(|d| vec![0.0; n.saturating_sub(d)]).collect();
        for d in 0..=bw {
            for i in 0..n.saturating_sub(d) {
                l[d][i] = self.diags[d][i];
            }
        }
        for j in 0..n {
            // subtract contributions of previous columns k with |j - k| <= bw
            let kmin = j.saturating_sub(bw);
            for k in kmin..j {
                let ljk = l[j - k][k];
                if ljk == 0.0 {
                    continue;
                }
                let imax = (k + bw).min(n - 1);
                for i in j..=imax {
                    l[i - j][j] -= l[i - k][k] * ljk;
                }
            }
            let pivot = l[0][j];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::LinearSolve(format!(
                    "non-positive Cholesky pivot {pivot} at column {j}"
                )));
            }
            let s = pivot.sqrt();
            l[0][j] = s;
            let inv = 1.0 / s;
            let imax = (j + bw).min(n - 1);
            for i in (j + 1)..=imax {
                l[i - j][j] *= inv;
            }
        }
        Ok(BandCholesky { n, bw, l })
    }
}

/// Factorized banded SPD matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<Vec<f64>>,
}

impl BandCholesky {
    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        // forward: L y = b
        for j in 0..n {
            let v = b[j] / self.l[0][j];
            b[j] = v;
            let imax = (j + bw).min(n - 1);
            for i in (j + 1)..=imax {
                b[i] -= self.l[i - j][j] * v;
            }
        }
        // backward: Lᵀ x = y
        for j in (0..n).rev() {
            let imax = (j + bw).min(n - 1);
            let mut acc = b[j];
            for i in (j + 1)..=imax {
                acc -= self.l[i - j][j] * b[i];
            }
            b[j] = acc / self.l[0][j];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
