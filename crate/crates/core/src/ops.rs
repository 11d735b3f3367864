//! Finite-difference operators on the clamped plate.
//!
//! All stencils are second-order centered differences. Two boundary closures
//! are in play:
//!
//! * zero-Dirichlet extension (`u = 0` on `Γ`) for first and second
//!   derivatives and the 5-point Laplacian;
//! * clamped ghost reflection `u(-h) = u(h)` (encoding `∂_ν u = 0` to second
//!   order on top of `u = 0`) for the 13-point bilaplacian.
//!
//! The discrete gradient norm `||∇u||²` is taken in the summation-by-parts
//! form `⟨-Δ_h u, u⟩ h1 h2`, i.e. the edge-midpoint (staggered) trapezoid
//! sum. With this choice the Berger force is exactly the gradient of the
//! discrete potential, which keeps the conservative-limit energy identity
//! exact at the spatial level.

use crate::band::BandMatrix;
use crate::error::{Error, Result};
use crate::grid::{Field, PlateGrid};

/// Differential operator selector for [`apply_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Laplacian,
    Bilaplacian,
    Dx,
    Dy,
    Dxy,
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplacian" => Ok(Self::Laplacian),
            "bilaplacian" => Ok(Self::Bilaplacian),
            "dx" => Ok(Self::Dx),
            "dy" => Ok(Self::Dy),
            "dxy" => Ok(Self::Dxy),
            other => Err(Error::InvalidParam(format!("unknown operator kind '{other}'"))),
        }
    }
}

/// Apply a centered finite-difference operator to an interior field.
pub fn apply_operator(kind: OperatorKind, f: &[f64], grid: &PlateGrid) -> Result<Field> {
    grid.check(f)?;
    Ok(match kind {
        OperatorKind::Laplacian => laplacian(f, grid),
        OperatorKind::Bilaplacian => bilaplacian(f, grid),
        OperatorKind::Dx => dx(f, grid),
        OperatorKind::Dy => dy(f, grid),
        OperatorKind::Dxy => dxy(f, grid),
    })
}

#[inline]
fn at(f: &[f64], n1: usize, n2: usize, ix: i64, iy: i64) -> f64 {
    if ix >= 0 && (ix as usize) < n1 && iy >= 0 && (iy as usize) < n2 {
        f[iy as usize * n1 + ix as usize]
    } else {
        0.0
    }
}

/// ∂x with zero-Dirichlet extension.
pub fn dx(f: &[f64], g: &PlateGrid) -> Field {
    let (n1, n2) = (g.n1, g.n2);
    let c = 1.0 / (2.0 * g.h1);
    let mut out = vec![0.0; f.len()];
    for iy in 0..n2 {
        let row = iy * n1;
        for ix in 0..n1 {
            let l = if ix > 0 { f[row + ix - 1] } else { 0.0 };
            let r = if ix + 1 < n1 { f[row + ix + 1] } else { 0.0 };
            out[row + ix] = c * (r - l);
        }
    }
    out
}

/// ∂y with zero-Dirichlet extension.
pub fn dy(f: &[f64], g: &PlateGrid) -> Field {
    let (n1, n2) = (g.n1, g.n2);
    let c = 1.0 / (2.0 * g.h2);
    let mut out = vec![0.0; f.len()];
    for iy in 0..n2 {
        for ix in 0..n1 {
            let d = if iy > 0 { f[(iy - 1) * n1 + ix] } else { 0.0 };
            let u = if iy + 1 < n2 { f[(iy + 1) * n1 + ix] } else { 0.0 };
            out[iy * n1 + ix] = c * (u - d);
        }
    }
    out
}

/// ∂xy cross derivative with zero-Dirichlet extension.
pub fn dxy(f: &[f64], g: &PlateGrid) -> Field {
    let (n1, n2) = (g.n1, g.n2);
    let c = 1.0 / (4.0 * g.h1 * g.h2);
    let mut out = vec![0.0; f.len()];
    for iy in 0..n2 as i64 {
        for ix in 0..n1 as i64 {
            out[iy as usize * n1 + ix as usize] = c
                * (at(f, n1, n2, ix + 1, iy + 1) - at(f, n1, n2, ix + 1, iy - 1)
                    - at(f, n1, n2, ix - 1, iy + 1)
                    + at(f, n1, n2, ix - 1, iy - 1));
        }
    }
    out
}

/// ∂xx with zero-Dirichlet extension.
pub fn dxx(f: &[f64], g: &PlateGrid) -> Field {
    let (n1, n2) = (g.n1, g.n2);
    let c = 1.0 / (g.h1 * g.h1);
    let mut out = vec![0.0; f.len()];
    for iy in 0..n2 {
        let row = iy * n1;
        for ix in 0..n1 {
            let l = if ix > 0 { f[row + ix - 1] } else { 0.0 };
            let r = if ix + 1 < n1 { f[row + ix + 1] } else { 0.0 };
            out[row + ix] = c * (l - 2.0 * f[row + ix] + r);
        }
    }
    out
}

/// ∂yy with zero-Dirichlet extension.
pub fn dyy(f: &[f64], g: &PlateGrid) -> Field {
    let (n1, n2) = (g.n1, g.n2);
    let c = 1.0 / (g.h2 * g.h2);
    let mut out = vec![0.0; f.len()];
    for iy in 0..n2 {
        for ix in 0..n1 {
            let d = if iy > 0 { f[(iy - 1) * n1 + ix] } else { 0.0 };
            let u = if iy + 1 < n2 { f[(iy + 1) * n1 + ix] } else { 0.0 };
            out[iy * n1 + ix] = c * (d - 2.0 * f[iy * n1 + ix] + u);
        }
    }
    out
}

/// 5-point Laplacian with zero-Dirichlet extension.
pub fn laplacian(f: &[f64], g: &PlateGrid) -> Field {
    let mut out = dxx(f, g);
    let oy = dyy(f, g);
    for (o, v) in out.iter_mut().zip(&oy) {
        *o += v;
    }
    out
}

/// Discrete `||∇u||²` in the summation-by-parts form `⟨-Δ_h u, u⟩ h1 h2`.
///
/// Identical to the staggered edge-midpoint sum of squared forward
/// differences (boundary edges included, boundary values zero).
pub fn grad_norm_sq(f: &[f64], g: &PlateGrid) -> f64 {
    let lap = laplacian(f, g);
    -g.inner(&lap, f)
}

/// Clamped ghost index fold along one axis: physical node `m` in
/// `-1..=n` with boundary at `m = -1` and `m = n`; ghost `m = -2` maps to
/// `m = 0`, ghost `m = n + 1` maps to `m = n - 1` (mirror across the
/// boundary node); boundary nodes themselves carry zero.
#[inline]
fn fold(m: i64, n: usize) -> Option<usize> {
    let n = n as i64;
    let m = if m == -2 {
        0
    } else if m == n + 1 {
        n - 1
    } else {
        m
    };
    if m >= 0 && m < n {
        Some(m as usize)
    } else {
        None
    }
}

/// 13-point clamped bilaplacian stencil expressed as (offset, weight) taps.
///
/// `Δ² = ∂xxxx + 2 ∂xxyy + ∂yyyy`; the taps below are in units of the grid
/// index offsets and must be scaled by the anisotropic coefficients.
const X4: [(i64, f64); 5] = [(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)];
const XY: [(i64, i64, f64); 9] = [
    (-1, -1, 1.0),
    (0, -1, -2.0),
    (1, -1, 1.0),
    (-1, 0, -2.0),
    (0, 0, 4.0),
    (1, 0, -2.0),
    (-1, 1, 1.0),
    (0, 1, -2.0),
    (1, 1, 1.0),
];

/// Clamped 13-point bilaplacian (ghost reflection `u(-h) = u(h)`).
pub fn bilaplacian(f: &[f64], g: &PlateGrid) -> Field {
    let (n1, n2) = (g.n1, g.n2);
    let cx = 1.0 / g.h1.powi(4);
    let cy = 1.0 / g.h2.powi(4);
    let cxy = 2.0 / (g.h1 * g.h1 * g.h2 * g.h2);
    let mut out = vec![0.0; f.len()];
    for iy in 0..n2 as i64 {
        for ix in 0..n1 as i64 {
            let mut acc = 0.0;
            for &(d, w) in &X4 {
                if let Some(jx) = fold(ix + d, n1) {
                    acc += cx * w * f[iy as usize * n1 + jx];
                }
            }
            for &(d, w) in &X4 {
                if let Some(jy) = fold(iy + d, n2) {
                    acc += cy * w * f[jy * n1 + ix as usize];
                }
            }
            for &(dx_, dy_, w) in &XY {
                if let (Some(jx), Some(jy)) = (fold(ix + dx_, n1), fold(iy + dy_, n2)) {
                    acc += cxy * w * f[jy * n1 + jx];
                }
            }
            out[iy as usize * n1 + ix as usize] = acc;
        }
    }
    out
}

/// Assemble the clamped bilaplacian as a symmetric banded matrix
/// (half-bandwidth `2 * n1`), optionally shifted by `shift * I`.
pub fn bilaplacian_banded(g: &PlateGrid, shift: f64) -> BandMatrix {
    let (n1, n2) = (g.n1, g.n2);
    let n = n1 * n2;
    let cx = 1.0 / g.h1.powi(4);
    let cy = 1.0 / g.h2.powi(4);
    let cxy = 2.0 / (g.h1 * g.h1 * g.h2 * g.h2);
    let mut m = BandMatrix::new(n, 2 * n1);
    for iy in 0..n2 as i64 {
        for ix in 0..n1 as i64 {
            let row = iy as usize * n1 + ix as usize;
            m.add(row, row, shift);
            for &(d, w) in &X4 {
                if let Some(jx) = fold(ix + d, n1) {
                    m.add(row, iy as usize * n1 + jx, cx * w);
                }
            }
            for &(d, w) in &X4 {
                if let Some(jy) = fold(iy + d, n2) {
                    m.add(row, jy * n1 + ix as usize, cy * w);
                }
            }
            for &(dx_, dy_, w) in &XY {
                if let (Some(jx), Some(jy)) = (fold(ix + dx_, n1), fold(iy + dy_, n2)) {
                    m.add(row, jy * n1 + jx, cxy * w);
                }
            }
        }
    }
    m
}

/// Dense copy of the clamped bilaplacian (for Jacobians / eigen checks).
pub fn bilaplacian_dense(g: &PlateGrid) -> nalgebra::DMatrix<f64> {
    let n = g.len();
    let mut a = nalgebra::DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = bilaplacian(&e, g);
        for i in 0..n {
            a[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn test_grid(n: usize) -> PlateGrid {
        build_grid(1.0, 1.0, n, n).unwrap()
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let g = test_grid(15);
        let z = g.zeros();
        for kind in [
            OperatorKind::Laplacian,
            OperatorKind::Bilaplacian,
            OperatorKind::Dx,
            OperatorKind::Dy,
            OperatorKind::Dxy,
        ] {
            let out = apply_operator(kind, &z, &g).unwrap();
            assert!(out.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!("grad".parse::<OperatorKind>().is_err());
        assert!("dx".parse::<OperatorKind>().is_ok());
    }

    #[test]
    fn operators_are_linear() {
        let g = test_grid(17);
        let f1 = g.sample(|x, y| (3.1 * x).sin() * (2.7 * y).cos());
        let f2 = g.sample(|x, y| x * x * y + 0.3 * y);
        let a = 2.75;
        for kind in [
            OperatorKind::Laplacian,
            OperatorKind::Bilaplacian,
            OperatorKind::Dx,
            OperatorKind::Dy,
            OperatorKind::Dxy,
        ] {
            let combo: Field = f1.iter().zip(&f2).map(|(u, v)| a * u + v).collect();
            let lhs = apply_operator(kind, &combo, &g).unwrap();
            let o1 = apply_operator(kind, &f1, &g).unwrap();
            let o2 = apply_operator(kind, &f2, &g).unwrap();
            for i in 0..lhs.len() {
                let rhs = a * o1[i] + o2[i];
                assert!(
                    (lhs[i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()),
                    "kind {kind:?} not linear at {i}"
                );
            }
        }
    }

    /// dx against the analytic derivative of g(x,y) = x(L1-x) y(L2-y):
    /// second-order convergence, error ratio in [3.5, 4.5] per h-halving.
    #[test]
    fn dx_second_order_against_analytic() {
        let f = |x: f64, y: f64| x * (1.0 - x) * y * (1.0 - y) * (2.0 * x + y).sin();
        let fx = |x: f64, y: f64| {
            (1.0 - 2.0 * x) * y * (1.0 - y) * (2.0 * x + y).sin()
                + x * (1.0 - x) * y * (1.0 - y) * 2.0 * (2.0 * x + y).cos()
        };
        let mut errs = Vec::new();
        for n in [15usize, 31, 63] {
            let g = test_grid(n);
            let u = g.sample(f);
            let num = dx(&u, &g);
            let exact = g.sample(fx);
            let err = num
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (3.5..=4.5).contains(&ratio),
                "dx convergence ratio {ratio} outside [3.5, 4.5]; errors {errs:?}"
            );
        }
    }

    /// Same second-order check for the interior operators that feed the
    /// delay kernel.
    #[test]
    fn second_derivatives_second_order() {
        let f = |x: f64, y: f64| (x * (1.0 - x) * y * (1.0 - y)).powi(2);
        // interior-only comparison keeps the Dirichlet closure honest:
        // the clamped test function has vanishing value and gradient on Γ.
        let fxx = |x: f64, y: f64| {
            let p = |t: f64| t * (1.0 - t);
            let dp = |t: f64| 1.0 - 2.0 * t;
            2.0 * (dp(x) * dp(x) + p(x) * (-2.0)) * p(y) * p(y)
        };
        let mut errs = Vec::new();
        for n in [15usize, 31, 63] {
            let g = test_grid(n);
            let u = g.sample(f);
            let num = dxx(&u, &g);
            let exact = g.sample(fxx);
            let err = num
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(
                (3.4..=4.6).contains(&ratio),
                "dxx convergence ratio {ratio}; errors {errs:?}"
            );
        }
    }

    /// Eigenpair residual: assemble the clamped operator on a 15×15 grid,
    /// take an eigenpair from a dense symmetric eigensolver, and check
    /// `A f = λ f` through the matrix-free path.
    #[test]
    fn bilaplacian_matches_dense_eigenpair() {
        let g = test_grid(15);
        let a = bilaplacian_dense(&g);
        // symmetry of the assembled operator
        let at = a.transpose();
        let asym = (&a - &at).abs().max();
        assert!(asym < 1e-8 * a.abs().max(), "assembled operator not symmetric");

        let es = nalgebra::SymmetricEigen::new(a.clone());
        // smallest eigenvalue positive => SPD under clamped closure
        let min = es.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0, "clamped bilaplacian not SPD: min eigenvalue {min}");

        // pick the eigenpair with the smallest eigenvalue
        let (k, _) = es
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let lambda = es.eigenvalues[k];
        let v: Vec<f64> = es.eigenvectors.column(k).iter().cloned().collect();
        let av = bilaplacian(&v, &g);
        let resid = av
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).abs())
            .fold(0.0f64, f64::max);
        assert!(
            resid < 1e-6 * lambda,
            "eigenpair residual {resid} too large for lambda {lambda}"
        );
    }

    /// The summation-by-parts gradient norm agrees with the analytic
    /// Dirichlet integral at second order.
    #[test]
    fn grad_norm_consistent() {
        // u = sin(πx) sin(πy): ||∇u||² = π²/2 on the unit square.
        let exact = std::f64::consts::PI.powi(2) / 2.0;
        let mut errs = Vec::new();
        for n in [31usize, 63] {
            let g = test_grid(n);
            let u = g.sample(|x, y| (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin());
            errs.push((grad_norm_sq(&u, &g) - exact).abs());
        }
        assert!(errs[0] / errs[1] > 3.0, "grad norm not second order: {errs:?}");
        assert!(errs[1] < 1e-3 * exact);
    }
}
