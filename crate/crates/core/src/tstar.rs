//! The flow-memory horizon `t*`.
//!
//! A material point drifts along `x(U, θ, s) = (x - (U + sinθ) s, y - s cosθ)`.
//! `t*` is the first time after which every drifted footprint of `Ω` has left
//! `Ω`, for every angle. The footprint separates once the translation
//! `s·v(θ)` leaves the difference body `Ω - Ω`; for the rectangle
//! `(0,L1) × (0,L2)` this gives the closed form
//!
//! ```text
//! s_exit(θ) = min( L1 / |U + sinθ|, L2 / |cosθ| )
//! ```
//!
//! (the support width of Ω along the drift vector, divided by the squared
//! drift speed, axis by axis), and `t* = max_θ s_exit(θ)` located by a dense
//! θ-scan plus golden-section refinement.

use crate::error::{Error, Result};
use crate::grid::PlateGrid;

/// Exit time for one drift angle on the rectangle `(0,L1) × (0,L2)`.
#[inline]
pub fn exit_time(grid: &PlateGrid, u_mach: f64, theta: f64) -> f64 {
    let vx = (u_mach + theta.sin()).abs();
    let vy = theta.cos().abs();
    let sx = if vx > 0.0 { grid.l1 / vx } else { f64::INFINITY };
    let sy = if vy > 0.0 { grid.l2 / vy } else { f64::INFINITY };
    sx.min(sy)
}

/// Memory horizon `t*(Ω, U)` for `0 <= U < 1`.
pub fn compute_tstar(grid: &PlateGrid, u_mach: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u_mach) {
        return Err(Error::InvalidParam(format!(
            "subsonic flow required: 0 <= U < 1, got U = {u_mach}"
        )));
    }
    let scan = 8192usize;
    let mut best = f64::NEG_INFINITY;
    let mut best_k = 0usize;
    for k in 0..scan {
        let th = 2.0 * std::f64::consts::PI * k as f64 / scan as f64;
        let v = exit_time(grid, u_mach, th);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    // golden-section refinement around the best scan node
    let dth = 2.0 * std::f64::consts::PI / scan as f64;
    let mut a = (best_k as f64 - 1.0) * dth;
    let mut b = (best_k as f64 + 1.0) * dth;
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = exit_time(grid, u_mach, c);
    let mut fd = exit_time(grid, u_mach, d);
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = exit_time(grid, u_mach, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = exit_time(grid, u_mach, d);
        }
    }
    Ok(best.max(fc).max(fd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    /// Independent brute-force oracle: exit time of each boundary start point
    /// under the drift, found by the slab (ray/box) method, maximized over a
    /// dense boundary sampling and θ grid with local parabolic refinement.
    fn brute_force_tstar(grid: &PlateGrid, u_mach: f64) -> f64 {
        let nb = 512usize;
        let mut pts = Vec::with_capacity(4 * nb);
        for i in 0..=nb {
            let fx = grid.l1 * i as f64 / nb as f64;
            let fy = grid.l2 * i as f64 / nb as f64;
            pts.push((fx, 0.0));
            pts.push((fx, grid.l2));
            pts.push((0.0, fy));
            pts.push((grid.l1, fy));
        }
        let exit_of_theta = |th: f64| -> f64 {
            let vx = u_mach + th.sin();
            let vy = th.cos();
            let mut worst = 0.0f64;
            for &(px, py) in &pts {
                // ray p - s (vx, vy): time to leave [0,L1]x[0,L2]
                let sx = if vx > 0.0 {
                    px / vx
                } else if vx < 0.0 {
                    (px - grid.l1) / vx
                } else {
                    f64::INFINITY
                };
                let sy = if vy > 0.0 {
                    py / vy
                } else if vy < 0.0 {
                    (py - grid.l2) / vy
                } else {
                    f64::INFINITY
                };
                worst = worst.max(sx.min(sy));
            }
            worst
        };
        let nth = 512usize;
        let dth = 2.0 * std::f64::consts::PI / nth as f64;
        let mut best = (0.0f64, 0usize);
        for k in 0..nth {
            let v = exit_of_theta(k as f64 * dth);
            if v > best.0 {
                best = (v, k);
            }
        }
        // ternary refinement
        let mut a = (best.1 as f64 - 1.0) * dth;
        let mut b = (best.1 as f64 + 1.0) * dth;
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if exit_of_theta(m1) < exit_of_theta(m2) {
                a = m1;
            } else {
                b = m2;
            }
        }
        exit_of_theta(0.5 * (a + b)).max(best.0)
    }

    #[test]
    fn unit_square_at_rest_gives_diagonal() {
        let g = build_grid(1.0, 1.0, 15, 15).unwrap();
        let t = compute_tstar(&g, 0.0).unwrap();
        assert!(
            (t - 2.0f64.sqrt()).abs() < 1e-9,
            "t*(U=0) = {t}, expected sqrt(2)"
        );
        let oracle = brute_force_tstar(&g, 0.0);
        assert!((t - oracle).abs() < 1e-6 * oracle);
    }

    #[test]
    fn half_mach_exceeds_all_straight_drifts() {
        let g = build_grid(1.0, 1.0, 15, 15).unwrap();
        let t = compute_tstar(&g, 0.5).unwrap();
        // the θ = 3π/2 drift alone gives exactly 1/(1-U) = 2
        assert!(t > 2.0, "t*(U=0.5) = {t} should exceed 2");
        assert!(t > compute_tstar(&g, 0.0).unwrap());
        let oracle = brute_force_tstar(&g, 0.5);
        assert!(
            (t - oracle).abs() < 1e-5 * oracle,
            "t* {t} vs brute-force {oracle}"
        );
    }

    #[test]
    fn monotone_in_mach_number() {
        let g = build_grid(1.0, 1.0, 15, 15).unwrap();
        let mut prev = 0.0;
        for k in 0..10 {
            let u = 0.1 * k as f64;
            let t = compute_tstar(&g, u).unwrap();
            assert!(
                t >= prev - 1e-12,
                "t* not monotone at U = {u}: {t} < {prev}"
            );
            let oracle = brute_force_tstar(&g, u);
            assert!((t - oracle).abs() < 1e-5 * oracle);
            prev = t;
        }
    }

    #[test]
    fn supersonic_rejected() {
        let g = build_grid(1.0, 1.0, 15, 15).unwrap();
        assert!(compute_tstar(&g, 1.0).is_err());
        assert!(compute_tstar(&g, -0.1).is_err());
    }
}
