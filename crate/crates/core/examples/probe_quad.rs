//! Scratch probe: quadrature error structure of the delay kernel.

use panelflow_core::grid::build_grid;
use panelflow_core::history::DelayHistory;
use panelflow_core::qeval::{eval_q, eval_q_dt, QuadratureSpec};
use panelflow_core::tstar::compute_tstar;

fn main() {
    if std::env::args().any(|a| a == "dt") {
        probe_dt_convergence();
        return;
    }
    let g = build_grid(1.0, 1.0, 31, 31).unwrap();
    let u_mach = 0.4;
    let tstar = compute_tstar(&g, u_mach).unwrap();
    println!("tstar(U={u_mach}) = {tstar}");

    let bump = g.sample(|x, y| (4.0 * x * (1.0 - x) * y * (1.0 - y)).powi(2));
    let dt = 5e-3;
    let h = DelayHistory::from_datum(&g, tstar, dt, |_s| bump.clone(), |_s| g.zeros());

    let reference = eval_q(
        &h,
        0.0,
        u_mach,
        &QuadratureSpec {
            n_theta: 512,
            n_s: 512,
        },
        &g,
    )
    .unwrap();
    let den: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();

    for (nt, ns) in [
        (32usize, 64usize),
        (48, 64),
        (64, 64),
        (128, 64),
        (256, 64),
        (48, 128),
        (48, 256),
        (48, 512),
        (64, 128),
        (128, 128),
        (128, 256),
        (256, 256),
    ] {
        let q = eval_q(&h, 0.0, u_mach, &QuadratureSpec { n_theta: nt, n_s: ns }, &g).unwrap();
        let num: f64 = q
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        println!("n_theta {nt:4} n_s {ns:4}: rel {:.4e}", num / den);
    }

    // q_dt vs centered differences of q on an oscillating synthetic history:
    // one fine history, FD steps are multiples of the snapshot spacing.
    println!("\nq_dt vs FD oracle:");
    let omega = 2.0;
    for n in [31usize, 63] {
        let g = build_grid(1.0, 1.0, n, n).unwrap();
        let bump = g.sample(|x, y| (4.0 * x * (1.0 - x) * y * (1.0 - y)).powi(3));
        let quad = QuadratureSpec { n_theta: 64, n_s: 256 };
        let tstar = compute_tstar(&g, u_mach).unwrap();
        let dt_snap = 0.005;
        let traj = |t: f64| -> Vec<f64> { bump.iter().map(|v| v * (omega * t).sin()).collect() };
        let traj_v =
            |t: f64| -> Vec<f64> { bump.iter().map(|v| v * omega * (omega * t).cos()).collect() };
        // history spanning [-t* - margin, +0.32] so q(t ± dt_fd) is available
        let mut hh = DelayHistory::new(tstar, dt_snap);
        let m_lo = ((tstar + 0.4) / dt_snap).ceil() as i64;
        let m_hi = (0.4 / dt_snap).ceil() as i64;
        for k in -m_lo..=m_hi {
            let s = k as f64 * dt_snap;
            hh.push_unchecked(s, traj(s), traj_v(s), &g);
        }
        let qd = eval_q_dt(&hh, 0.0, u_mach, &quad, &g).unwrap();
        let den: f64 = qd.iter().map(|v| v * v).sum::<f64>().sqrt();

        // independent route: q applied to the velocity history
        let mut hv = DelayHistory::new(tstar, dt_snap);
        for k in -m_lo..=m_hi {
            let s = k as f64 * dt_snap;
            hv.push_unchecked(s, traj_v(s), g.zeros(), &g);
        }
        let qv = eval_q(&hv, 0.0, u_mach, &quad, &g).unwrap();
        let dnum: f64 = qd
            .iter()
            .zip(&qv)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        println!(
            "  n {n}: ||eval_q_dt - eval_q(v-history)|| / ||eval_q_dt|| = {:.4e}",
            dnum / den
        );

        // frozen-history FD sanity: should be ~0 (checks time bracketing)
        let mut hf = DelayHistory::new(tstar, dt_snap);
        for k in -m_lo..=m_hi {
            let s = k as f64 * dt_snap;
            hf.push_unchecked(s, bump.clone(), g.zeros(), &g);
        }
        let qfp = eval_q(&hf, 0.16, u_mach, &quad, &g).unwrap();
        let qfm = eval_q(&hf, -0.16, u_mach, &quad, &g).unwrap();
        let fnum: f64 = qfp
            .iter()
            .zip(&qfm)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let fden: f64 = qfp.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("  n {n}: frozen FD rel {:.4e}", fnum / fden);
        for steps in [64i64, 32, 16, 8, 4] {
            let dt_fd = steps as f64 * dt_snap;
            let qp = eval_q(&hh, dt_fd, u_mach, &quad, &g).unwrap();
            let qm = eval_q(&hh, -dt_fd, u_mach, &quad, &g).unwrap();
            let fd: Vec<f64> = qp
                .iter()
                .zip(&qm)
                .map(|(a, b)| (a - b) / (2.0 * dt_fd))
                .collect();
            let num: f64 = qd
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            println!("  n {n} dt_fd {dt_fd:7.4}: rel err {:.4e}", num / den);
        }
    }
}

#[allow(dead_code)]
fn probe_dt_convergence() {
    use panelflow_core::dynamics::{simulate, DelayDatum, ModelParams};
    use panelflow_core::energy::PlateState;
    let g = build_grid(1.0, 1.0, 15, 15).unwrap();
    let mut base = ModelParams::new(&g);
    base.flow_coupling = false;
    base.k = 0.5;
    base.b = 1.0;
    base.p0 = g.zeros();
    base.t_end = 0.4;
    base.tol_v = 0.0;
    let amp = 0.2;
    let init = PlateState {
        u: g.sample(|x, y| amp * 0.25 * (1.0 - (2.0*std::f64::consts::PI*x).cos()) * (1.0 - (2.0*std::f64::consts::PI*y).cos())),
        v: g.zeros(),
        t: 0.0,
    };
    let run = |dt: f64| {
        let mut p = base.clone();
        p.dt = dt;
        simulate(&init, DelayDatum::Frozen, &p, &g, usize::MAX, None)
            .unwrap()
            .state
    };
    let reference = run(0.0025 / 16.0);
    for dt in [0.02, 0.01, 0.005, 0.0025] {
        let s = run(dt);
        let du: Vec<f64> = s.u.iter().zip(&reference.u).map(|(a, b)| a - b).collect();
        let dv: Vec<f64> = s.v.iter().zip(&reference.v).map(|(a, b)| a - b).collect();
        println!(
            "dt {dt:7.4}: u-err {:.4e}  v-err {:.4e}",
            g.norm_l2(&du),
            g.norm_l2(&dv)
        );
    }
}
