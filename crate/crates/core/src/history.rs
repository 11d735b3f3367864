//! Ring buffer of past plate fields covering the memory window `[t - t*, t]`.
//!
//! Snapshots carry the displacement, the velocity, and the three second
//! derivatives of the displacement (precomputed once at push time; the delay
//! kernel samples them thousands of times per step).

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::grid::{Field, PlateGrid};
use crate::ops::{dxx, dxy, dyy};

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: Field,
    pub v: Field,
    pub uxx: Field,
    pub uxy: Field,
    pub uyy: Field,
}

impl Snapshot {
    pub fn new(t: f64, u: Field, v: Field, grid: &PlateGrid) -> Self {
        let uxx = dxx(&u, grid);
        let uxy = dxy(&u, grid);
        let uyy = dyy(&u, grid);
        Snapshot {
            t,
            u,
            v,
            uxx,
            uxy,
            uyy,
        }
    }
}

/// Uniformly spaced history of plate states over at least `[t - t*, t]`.
#[derive(Debug, Clone)]
pub struct DelayHistory {
    pub tstar: f64,
    pub dt: f64,
    snaps: VecDeque<Snapshot>,
}

impl DelayHistory {
    pub fn new(tstar: f64, dt: f64) -> Self {
        DelayHistory {
            tstar,
            dt,
            snaps: VecDeque::new(),
        }
    }

    /// Seed a history from a delay datum `eta(s)` on `s ∈ [-t* - 2 dt, 0]`
    /// with `eta(0)` the initial displacement. Velocities are supplied by
    /// `eta_v` (zero for a frozen datum).
    pub fn from_datum(
        grid: &PlateGrid,
        tstar: f64,
        dt: f64,
        eta: impl Fn(f64) -> Field,
        eta_v: impl Fn(f64) -> Field,
    ) -> Self {
        let m = (tstar / dt).ceil() as i64 + 2;
        let mut h = DelayHistory::new(tstar, dt);
        for k in -m..=0 {
            let s = k as f64 * dt;
            h.snaps.push_back(Snapshot::new(s, eta(s), eta_v(s), grid));
        }
        h
    }

    pub fn len(&self) -> usize {
        self.snaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snaps.is_empty()
    }

    pub fn newest(&self) -> Option<&Snapshot> {
        self.snaps.back()
    }

    pub fn oldest(&self) -> Option<&Snapshot> {
        self.snaps.front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Snapshot> {
        self.snaps.iter()
    }

    /// Append without the uniform-step check (synthetic histories, restore).
    pub fn push_unchecked(&mut self, t: f64, u: Field, v: Field, grid: &PlateGrid) {
        self.snaps.push_back(Snapshot::new(t, u, v, grid));
    }

    /// Append a state; the time must advance by exactly `dt`
    /// (tolerance `1e-12 dt`). Snapshots older than `t - t* - 2 dt` are
    /// evicted.
    pub fn push(&mut self, t: f64, u: Field, v: Field, grid: &PlateGrid) -> Result<()> {
        if let Some(last) = self.snaps.back() {
            let expected = last.t + self.dt;
            if (t - expected).abs() > 1e-12 * self.dt {
                return Err(Error::NonUniformStep { expected, got: t });
            }
        }
        self.snaps.push_back(Snapshot::new(t, u, v, grid));
        let cutoff = t - self.tstar - 2.0 * self.dt;
        while let Some(front) = self.snaps.front() {
            if front.t < cutoff - 1e-12 * self.dt {
                self.snaps.pop_front();
            } else {
                break;
            }
        }
        Ok(())
    }

    /// True when the buffer spans `[t - t*, t]`.
    pub fn mature_at(&self, t: f64) -> bool {
        match (self.snaps.front(), self.snaps.back()) {
            (Some(f), Some(b)) => {
                let tol = 1e-9 * self.dt.max(1e-30);
                f.t <= t - self.tstar + tol && b.t >= t - tol
            }
            _ => false,
        }
    }

    pub fn require_mature(&self, t: f64) -> Result<()> {
        if self.mature_at(t) {
            Ok(())
        } else {
            Err(Error::ImmatureHistory {
                t,
                oldest: self.oldest().map(|s| s.t).unwrap_or(f64::NAN),
                newest: self.newest().map(|s| s.t).unwrap_or(f64::NAN),
                needed: t - self.tstar,
            })
        }
    }

    /// Bracketing pair for linear interpolation at `t_q`: returns
    /// `(index, alpha)` with the value `(1 - alpha) * snaps[index] +
    /// alpha * snaps[index + 1]` (alpha clamped to [0, 1]).
    pub fn bracket(&self, t_q: f64) -> (usize, f64) {
        let t0 = self.snaps.front().map(|s| s.t).unwrap_or(0.0);
        let pos = (t_q - t0) / self.dt;
        let last = self.snaps.len().saturating_sub(1);
        if pos <= 0.0 {
            return (0, 0.0);
        }
        let idx = pos.floor() as usize;
        if idx >= last {
            return (last.saturating_sub(1).min(last), if last == 0 { 0.0 } else { 1.0 });
        }
        (idx, pos - idx as f64)
    }

    pub fn get(&self, idx: usize) -> &Snapshot {
        &self.snaps[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn push_appends_and_evicts() {
        let g = build_grid(1.0, 1.0, 9, 9).unwrap();
        let dt = 0.1;
        let mut h = DelayHistory::new(0.5, dt);
        h.push(0.0, g.zeros(), g.zeros(), &g).unwrap();
        assert_eq!(h.len(), 1);
        for k in 1..=20 {
            h.push(k as f64 * 0.1, g.zeros(), g.zeros(), &g).unwrap();
        }
        // window [t - t* - 2 dt, t] = [1.3, 2.0]: 8 snapshots retained
        assert!(h.oldest().unwrap().t >= 1.3 - 1e-12);
        assert_eq!(h.len(), 8);
        assert!(h.mature_at(2.0));
        assert!(!h.mature_at(2.5));
    }

    #[test]
    fn rejects_jumped_step() {
        let g = build_grid(1.0, 1.0, 9, 9).unwrap();
        let mut h = DelayHistory::new(0.5, 0.1);
        h.push(0.0, g.zeros(), g.zeros(), &g).unwrap();
        let err = h.push(0.2, g.zeros(), g.zeros(), &g);
        assert!(matches!(err, Err(Error::NonUniformStep { .. })));
    }

    #[test]
    fn datum_seeding_spans_window() {
        let g = build_grid(1.0, 1.0, 9, 9).unwrap();
        let u0 = g.sample(|x, y| x * y);
        let h = DelayHistory::from_datum(&g, 1.4, 0.1, |_s| u0.clone(), |_s| g.zeros());
        assert!(h.mature_at(0.0));
        assert_eq!(h.newest().unwrap().t, 0.0);
        assert!(h.oldest().unwrap().t <= -1.4);
        // bracketing is exact at nodes
        let (idx, a) = h.bracket(h.get(3).t);
        assert_eq!(idx, 3);
        assert!(a.abs() < 1e-9);
    }
}
