//! Rectangular clamped-plate discretization.
//!
//! The plate occupies `Ω = (0, L1) × (0, L2)`. Only interior nodes carry
//! unknowns; the boundary `Γ` holds the clamped conditions `u = ∂_ν u = 0`.
//! Interior node `(ix, iy)` sits at `((ix+1)·h1, (iy+1)·h2)` and fields are
//! stored row-major as flat arrays: `idx = iy * n1 + ix`.

use crate::error::{Error, Result};

/// Geometry and resolution of the plate discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateGrid {
    pub l1: f64,
    pub l2: f64,
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
}

/// A scalar field on the interior nodes of a [`PlateGrid`].
pub type Field = Vec<f64>;

/// Build a grid over `(0, L1) × (0, L2)` with `n1 × n2` interior nodes.
///
/// Spacings are `h_i = L_i / (n_i + 1)`. The 13-point bilaplacian stencil
/// needs two interior layers, hence the minimum of 8 nodes per axis.
pub fn build_grid(l1: f64, l2: f64, n1: usize, n2: usize) -> Result<PlateGrid> {
    if !(l1 > 0.0) || !(l2 > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "side lengths must be positive, got L1 = {l1}, L2 = {l2}"
        )));
    }
    if n1 < 8 || n2 < 8 {
        return Err(Error::InvalidGrid(format!(
            "need at least 8 interior nodes per axis, got {n1} x {n2}"
        )));
    }
    Ok(PlateGrid {
        l1,
        l2,
        n1,
        n2,
        h1: l1 / (n1 + 1) as f64,
        h2: l2 / (n2 + 1) as f64,
    })
}

impl PlateGrid {
    /// Number of interior unknowns.
    #[inline]
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell area `h1 * h2` used as the quadrature weight of every interior
    /// node (trapezoid weights; boundary values vanish).
    #[inline]
    pub fn cell(&self) -> f64 {
        self.h1 * self.h2
    }

    /// Physical coordinates of interior node `(ix, iy)`.
    #[inline]
    pub fn xy(&self, ix: usize, iy: usize) -> (f64, f64) {
        ((ix as f64 + 1.0) * self.h1, (iy as f64 + 1.0) * self.h2)
    }

    /// Allocate a zero field.
    pub fn zeros(&self) -> Field {
        vec![0.0; self.len()]
    }

    /// Sample a closure `f(x, y)` on the interior nodes.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        let mut out = self.zeros();
        for iy in 0..self.n2 {
            for ix in 0..self.n1 {
                let (x, y) = self.xy(ix, iy);
                out[iy * self.n1 + ix] = f(x, y);
            }
        }
        out
    }

    /// Check that a field matches this grid.
    pub fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::ShapeMismatch {
                got: f.len(),
                want: self.len(),
            });
        }
        Ok(())
    }

    /// Discrete L2 norm: `sqrt(h1 h2 Σ f_i²)`.
    pub fn norm_l2(&self, f: &[f64]) -> f64 {
        (self.cell() * f.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Discrete L2 inner product `h1 h2 Σ f_i g_i`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.cell() * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Max (sup) norm over interior nodes.
    pub fn norm_max(&self, f: &[f64]) -> f64 {
        f.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Bilinear interpolation of the zero-extended field at physical `(x, y)`.
    ///
    /// The field is treated as point samples on the interior lattice and zero
    /// at every other lattice point, so the interpolant ramps to zero across
    /// the boundary ring.
    pub fn interp_zero_ext(&self, f: &[f64], x: f64, y: f64) -> f64 {
        let fx = x / self.h1 - 1.0;
        let fy = y / self.h2 - 1.0;
        let i0 = fx.floor();
        let j0 = fy.floor();
        let wx = fx - i0;
        let wy = fy - j0;
        let i0 = i0 as i64;
        let j0 = j0 as i64;
        let mut acc = 0.0;
        for (dj, wj) in [(0i64, 1.0 - wy), (1, wy)] {
            for (di, wi) in [(0i64, 1.0 - wx), (1, wx)] {
                let gi = i0 + di;
                let gj = j0 + dj;
                if gi >= 0 && (gi as usize) < self.n1 && gj >= 0 && (gj as usize) < self.n2 {
                    acc += wi * wj * f[gj as usize * self.n1 + gi as usize];
                }
            }
        }
        acc
    }
}

/// axpy: `y += a * x`.
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `a * x + b * y` elementwise into a fresh vector.
#[inline]
pub fn lin_comb(a: f64, x: &[f64], b: f64, y: &[f64]) -> Field {
    x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_matches_definition() {
        let g = build_grid(1.0, 1.0, 31, 31).unwrap();
        assert_eq!(g.h1, 1.0 / 32.0);
        assert_eq!(g.h2, 1.0 / 32.0);

        let g = build_grid(2.0, 1.0, 63, 31).unwrap();
        assert_eq!(g.h1, 2.0 / 64.0);
        assert_eq!(g.h2, 1.0 / 32.0);
        assert_eq!(g.h1, g.h2);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_grid(1.0, 1.0, 4, 4).is_err());
        assert!(build_grid(0.0, 1.0, 31, 31).is_err());
        assert!(build_grid(1.0, -2.0, 31, 31).is_err());
        assert!(build_grid(1.0, 1.0, 7, 31).is_err());
    }

    #[test]
    fn interp_recovers_nodes_and_vanishes_outside() {
        let g = build_grid(1.0, 1.0, 15, 15).unwrap();
        let f = g.sample(|x, y| x + 2.0 * y);
        let (x, y) = g.xy(3, 7);
        assert!((g.interp_zero_ext(&f, x, y) - (x + 2.0 * y)).abs() < 1e-14);
        // Far outside the padded lattice everything is zero.
        assert_eq!(g.interp_zero_ext(&f, -1.0, 0.5), 0.0);
        assert_eq!(g.interp_zero_ext(&f, 0.5, 3.0), 0.0);
    }
}
