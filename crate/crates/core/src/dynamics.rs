//! Time integration of the reduced delay plate
//!
//! ```text
//! u_tt + Δ²u + k u_t + [b - ||∇u||²]Δu = p0 - (∂_t + U ∂_x)u - q^u(t)
//! ```
//!
//! The `-u_t` contributed by the flow merges with `k u_t` into `(k+1) u_t`.
//! One step is implicit trapezoid (Crank–Nicolson) on the stiff symmetric
//! part `Δ²u + k₀ u_t (+ βu)` and an explicit predictor–corrector pass on
//! the Berger force, the convection `U ∂_x u`, and the delay term; the
//! corrector re-evaluates the `s = 0` endpoint of `q` with the predicted
//! state. The constant system matrix is factorized once per
//! `(grid, dt, k, β)`.
//!
//! `flow_coupling` toggles `{-u_t, -U∂_x u, -q}` as a unit; switching them
//! off restores the pure damped Berger plate (the conservative limit when
//! `k = 0`).

use crate::band::BandCholesky;
use crate::energy::{berger_force, plate_energy, PlateState};
use crate::error::{Error, Result};
use crate::grid::{Field, PlateGrid};
use crate::history::DelayHistory;
use crate::ops::{bilaplacian, bilaplacian_banded, dx, grad_norm_sq, laplacian};
use crate::qeval::{eval_q_with_head, head_weight, QuadratureSpec};
use crate::tstar::compute_tstar;

/// Initial delay datum η on `[-t*, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayDatum {
    /// `η(s) ≡ u₀` (frozen initial field).
    #[default]
    Frozen,
    /// `η(s) ≡ 0` for `s < 0`.
    Zero,
    /// linear ramp from 0 at `s = -t*` to `u₀` at `s = 0`.
    Ramp,
}

impl DelayDatum {
    /// Seed a history over `[-t* - 2dt, 0]`; the head carries `(u₀, v₀)`.
    pub fn build_history(
        &self,
        u0: &Field,
        v0: &Field,
        grid: &PlateGrid,
        tstar: f64,
        dt: f64,
    ) -> DelayHistory {
        let head_v = |s: f64, tail: Field| -> Field {
            if s == 0.0 {
                v0.clone()
            } else {
                tail
            }
        };
        match self {
            DelayDatum::Frozen => DelayHistory::from_datum(
                grid,
                tstar,
                dt,
                |_s| u0.clone(),
                |s| head_v(s, grid.zeros()),
            ),
            DelayDatum::Zero => DelayHistory::from_datum(
                grid,
                tstar,
                dt,
                |s| if s >= 0.0 { u0.clone() } else { grid.zeros() },
                |s| head_v(s, grid.zeros()),
            ),
            DelayDatum::Ramp => DelayHistory::from_datum(
                grid,
                tstar,
                dt,
                |s| {
                    let a = (1.0 + s / tstar).clamp(0.0, 1.0);
                    u0.iter().map(|v| a * v).collect()
                },
                |s| {
                    if s >= -tstar && s < 0.0 {
                        u0.iter().map(|v| v / tstar).collect()
                    } else {
                        head_v(s, grid.zeros())
                    }
                },
            ),
        }
    }
}

/// Physical and numerical parameters of one simulation.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// unperturbed flow velocity, `0 <= U < 1`
    pub u_mach: f64,
    /// viscous damping `k >= 0`
    pub k: f64,
    /// static damping β (0 for the reduced plate; > 0 only inside the
    /// z-system of the decomposition)
    pub beta: f64,
    /// Berger in-plane load
    pub b: f64,
    /// static pressure field
    pub p0: Field,
    pub dt: f64,
    /// time horizon
    pub t_end: f64,
    pub quad: QuadratureSpec,
    /// toggles `{-u_t, -U∂_x u, -q}` as a unit
    pub flow_coupling: bool,
    /// convergence: velocity norm threshold
    pub tol_v: f64,
    /// convergence: stationarity residual threshold, relative to `1 + ||p0||`
    pub tol_r: f64,
}

impl ModelParams {
    pub fn new(grid: &PlateGrid) -> Self {
        ModelParams {
            u_mach: 0.0,
            k: 0.0,
            beta: 0.0,
            b: 0.0,
            p0: grid.zeros(),
            dt: 5e-3,
            t_end: 10.0,
            quad: QuadratureSpec::default(),
            flow_coupling: true,
            tol_v: 1e-7,
            tol_r: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.u_mach) {
            return Err(Error::InvalidParam(format!("need 0 <= U < 1, got {}", self.u_mach)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParam(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_end < self.dt {
            return Err(Error::InvalidParam(format!(
                "horizon T = {} shorter than dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.k < 0.0 || self.beta < 0.0 {
            return Err(Error::InvalidParam("damping coefficients must be >= 0".into()));
        }
        Ok(())
    }

    /// effective velocity damping `k₀`: `k + 1` with the flow coupling on
    /// (the flow contributes `-u_t`), plain `k` otherwise
    pub fn k0(&self) -> f64 {
        if self.flow_coupling {
            self.k + 1.0
        } else {
            self.k
        }
    }
}

/// Factorized Crank–Nicolson propagator for one `(grid, dt, k₀, β)`.
pub struct Stepper {
    pub grid: PlateGrid,
    pub dt: f64,
    pub k0: f64,
    pub beta: f64,
    chol: BandCholesky,
}

impl Stepper {
    pub fn new(grid: &PlateGrid, dt: f64, k0: f64, beta: f64) -> Result<Self> {
        // M = (1 + dt k0 / 2) I + (dt²/4)(Δ² + β)
        let shift = (1.0 + 0.5 * dt * k0) / (0.25 * dt * dt) + beta;
        let mut m = bilaplacian_banded(grid, shift);
        m.scale(0.25 * dt * dt);
        let chol = m.cholesky()?;
        Ok(Stepper {
            grid: *grid,
            dt,
            k0,
            beta,
            chol,
        })
    }

    /// One trapezoid stage: advance `(u, v)` by `dt` with the explicit part
    /// held at `nbar`.
    pub fn stage(&self, u: &[f64], v: &[f64], nbar: &[f64]) -> (Field, Field) {
        let dt = self.dt;
        let au = bilaplacian(u, &self.grid);
        let av = bilaplacian(v, &self.grid);
        let n = u.len();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let w2 = au[i] + self.beta * u[i];
            let w1 = av[i] + self.beta * v[i];
            rhs[i] = v[i] - 0.25 * dt * dt * w1 - 0.5 * dt * self.k0 * v[i] - dt * w2 + dt * nbar[i];
        }
        self.chol.solve_in_place(&mut rhs);
        let vn = rhs;
        let mut un = vec![0.0; n];
        for i in 0..n {
            un[i] = u[i] + 0.5 * dt * (v[i] + vn[i]);
        }
        (un, vn)
    }
}

/// Explicit right-hand side `N = p0 - f_B(u) - U ∂_x u - q` (the q and
/// convection terms drop with the coupling off).
fn explicit_rhs(
    u: &[f64],
    s_shared: f64,
    q: Option<&[f64]>,
    params: &ModelParams,
    grid: &PlateGrid,
) -> Field {
    let lap = laplacian(u, grid);
    let coeff = params.b - s_shared;
    let mut out: Field = lap.iter().map(|l| -coeff * l).collect();
    for (o, p) in out.iter_mut().zip(&params.p0) {
        *o += p;
    }
    if params.flow_coupling {
        let ux = dx(u, grid);
        for i in 0..out.len() {
            out[i] -= params.u_mach * ux[i];
        }
        if let Some(q) = q {
            for i in 0..out.len() {
                out[i] -= q[i];
            }
        }
    }
    out
}

/// State advanced by one IMEX step plus the delay value at the new time.
pub struct StepResult {
    pub state: PlateState,
    /// `q(t_{n+1})` with the endpoint patched by the corrected state
    pub q_new: Option<Field>,
}

/// One IMEX predictor–corrector step of the reduced plate.
///
/// `q_now` must hold `q(t_n)` when the coupling is on (the integrator
/// carries it between steps; see [`Simulation`]).
pub fn step(
    state: &PlateState,
    hist: &DelayHistory,
    q_now: Option<&[f64]>,
    stepper: &Stepper,
    params: &ModelParams,
    grid: &PlateGrid,
) -> Result<StepResult> {
    let t1 = state.t + params.dt;
    let s_n = grad_norm_sq(&state.u, grid);
    let n_n = explicit_rhs(&state.u, s_n, q_now, params, grid);

    // predictor
    let (u_star, _v_star) = stepper.stage(&state.u, &state.v, &n_n);

    // corrector explicit term at t_{n+1}
    let (q_star, n_star) = if params.flow_coupling {
        let lap_star = laplacian(&u_star, grid);
        let q_star = eval_q_with_head(hist, t1, &lap_star, params.u_mach, &params.quad, grid)?;
        let s_star = grad_norm_sq(&u_star, grid);
        let n_star = explicit_rhs(&u_star, s_star, Some(&q_star), params, grid);
        (Some(q_star), n_star)
    } else {
        let s_star = grad_norm_sq(&u_star, grid);
        (None, explicit_rhs(&u_star, s_star, None, params, grid))
    };

    let nbar: Field = n_n
        .iter()
        .zip(&n_star)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let (u1, v1) = stepper.stage(&state.u, &state.v, &nbar);

    if !u1.iter().all(|v| v.is_finite()) || !v1.iter().all(|v| v.is_finite()) {
        return Err(Error::Diverged {
            t: t1,
            reason: "non-finite state after step".into(),
        });
    }

    // patch the s = 0 endpoint of q with the corrected state
    let q_new = q_star.map(|mut q| {
        let w0 = head_weight(hist.tstar, params.quad.n_s, hist.dt);
        let lap_star = laplacian(&u_star, grid);
        let lap1 = laplacian(&u1, grid);
        for i in 0..q.len() {
            q[i] += 0.5 * w0 * (lap1[i] - lap_star[i]);
        }
        q
    });

    Ok(StepResult {
        state: PlateState { u: u1, v: v1, t: t1 },
        q_new,
    })
}

/// Simulation verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Diverged,
    Timeout,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Converged => write!(f, "converged"),
            Verdict::Diverged => write!(f, "diverged"),
            Verdict::Timeout => write!(f, "timeout"),
        }
    }
}

/// Sampled diagnostics along a trajectory.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryRecord {
    pub t: Vec<f64>,
    pub ut_norm: Vec<f64>,
    pub du_norm: Vec<f64>,
    pub u_norm: Vec<f64>,
    pub e_pl: Vec<f64>,
    pub e_star: Vec<f64>,
    pub q_norm: Vec<f64>,
    /// cumulative `∫ ||u_t||² dτ`, accumulated per step
    pub diss_cum: Vec<f64>,
    /// distance to the equilibria set when one was supplied
    pub dist_eq: Vec<Option<f64>>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Outcome of [`simulate`].
pub struct SimOutcome {
    pub verdict: Verdict,
    pub record: TrajectoryRecord,
    pub state: PlateState,
    pub history: DelayHistory,
    /// stationarity residual (relative) at the final sample
    pub final_residual: f64,
}

/// Stationarity residual of the reduced equation at a state
/// (`Δ²u + βu + f_B(u) + U u_x + q - p0`), relative to `1 + ||p0||`.
pub fn stationarity_residual(
    u: &[f64],
    q: Option<&[f64]>,
    params: &ModelParams,
    grid: &PlateGrid,
) -> f64 {
    let au = bilaplacian(u, grid);
    let fb = berger_force(u, params.b, grid);
    let mut r: Field = au
        .iter()
        .zip(&fb)
        .zip(&params.p0)
        .map(|((a, f), p)| a + f - p)
        .collect();
    if params.beta > 0.0 {
        for (ri, ui) in r.iter_mut().zip(u) {
            *ri += params.beta * ui;
        }
    }
    if params.flow_coupling {
        let ux = dx(u, grid);
        for i in 0..r.len() {
            r[i] += params.u_mach * ux[i];
            if let Some(q) = q {
                r[i] += q[i];
            }
        }
    }
    grid.norm_l2(&r) / (1.0 + grid.norm_l2(&params.p0))
}

/// Run the reduced delay plate from `initial` with delay datum `eta`.
///
/// Terminates early when `||u_t|| < tol_v` and the stationarity residual
/// stays below `tol_r` for 3 consecutive samples (immediately when both are
/// at rounding level), or on divergence (non-finite state or `E* > 1e12`).
pub fn simulate(
    initial: &PlateState,
    eta: DelayDatum,
    params: &ModelParams,
    grid: &PlateGrid,
    sample_every: usize,
    dist_fn: Option<&dyn Fn(&PlateState) -> f64>,
) -> Result<SimOutcome> {
    params.validate()?;
    let sample_every = sample_every.max(1);
    let tstar = compute_tstar(grid, params.u_mach)?;
    let mut hist = eta.build_history(&initial.u, &initial.v, grid, tstar, params.dt);
    let stepper = Stepper::new(grid, params.dt, params.k0(), params.beta)?;

    let mut state = initial.clone();
    state.t = 0.0;
    let mut q_now = if params.flow_coupling {
        Some(crate::qeval::eval_q(&hist, 0.0, params.u_mach, &params.quad, grid)?)
    } else {
        None
    };

    let mut record = TrajectoryRecord::default();
    let mut diss = 0.0;
    let mut consecutive_ok = 0usize;
    let mut verdict = Verdict::Timeout;

    let n_steps = (params.t_end / params.dt).round() as usize;
    let sample = |state: &PlateState,
                  q: Option<&Field>,
                  diss: f64,
                  record: &mut TrajectoryRecord|
     -> (f64, f64) {
        let e = plate_energy(state, params.b, &params.p0, grid);
        let ut = grid.norm_l2(&state.v);
        record.t.push(state.t);
        record.ut_norm.push(ut);
        record.du_norm.push((2.0 * e.bending).max(0.0).sqrt());
        record.u_norm.push(grid.norm_l2(&state.u));
        record.e_pl.push(e.e_pl);
        record.e_star.push(e.e_star);
        record
            .q_norm
            .push(q.map(|q| grid.norm_l2(q)).unwrap_or(0.0));
        record.diss_cum.push(diss);
        record.dist_eq.push(dist_fn.map(|f| f(state)));
        let res = stationarity_residual(&state.u, q.map(|v| v.as_slice()), params, grid);
        (ut, res)
    };

    let (ut0, res0) = sample(&state, q_now.as_ref(), diss, &mut record);
    let mut final_residual = res0;
    if ut0 < 1e-14 && res0 < 1e-14 {
        // exact fixed point at start still takes one sample to confirm
        consecutive_ok = 2;
    }

    for n in 1..=n_steps {
        let prev_vnorm2 = grid.inner(&state.v, &state.v);
        let out = step(&state, &hist, q_now.as_deref(), &stepper, params, grid);
        let out = match out {
            Ok(o) => o,
            Err(Error::Diverged { .. }) => {
                verdict = Verdict::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        state = out.state;
        q_now = out.q_new;
        diss += 0.5 * params.dt * (prev_vnorm2 + grid.inner(&state.v, &state.v));
        hist.push(state.t, state.u.clone(), state.v.clone(), grid)?;

        if n % sample_every == 0 || n == n_steps {
            let (ut, res) = sample(&state, q_now.as_ref(), diss, &mut record);
            final_residual = res;
            let e_star = *record.e_star.last().unwrap();
            if !e_star.is_finite() || e_star > 1e12 {
                verdict = Verdict::Diverged;
                break;
            }
            if ut < params.tol_v && res < params.tol_r {
                consecutive_ok += 1;
                if consecutive_ok >= 3 || (ut < 1e-14 && res < 1e-14) {
                    verdict = Verdict::Converged;
                    break;
                }
            } else {
                consecutive_ok = 0;
            }
        }
    }

    Ok(SimOutcome {
        verdict,
        record,
        state,
        history: hist,
        final_residual,
    })
}

/// Trapezoid integral of `||u_t||²` over a sampled trajectory with the
/// last-quartile contribution fraction.
pub fn dissipation_integral(traj: &TrajectoryRecord) -> (f64, f64) {
    if traj.t.len() < 2 {
        return (0.0, 0.0);
    }
    let t0 = traj.t[0];
    let t1 = *traj.t.last().unwrap();
    let tq = t1 - 0.25 * (t1 - t0);
    let mut total = 0.0;
    let mut tail = 0.0;
    for i in 1..traj.t.len() {
        let w = 0.5 * (traj.t[i] - traj.t[i - 1]);
        let inc = w * (traj.ut_norm[i - 1].powi(2) + traj.ut_norm[i].powi(2));
        total += inc;
        if traj.t[i] > tq {
            tail += inc;
        }
    }
    if total == 0.0 {
        (0.0, 0.0)
    } else {
        (total, tail / total)
    }
}
