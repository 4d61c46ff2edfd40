//! Bramble-Pasciak CG: conjugate gradients for `P_tri^{-1} C` in the inner
//! product `H = diag(A - a A_mg, S)`.
//!
//! The iterates are those of textbook CG in the `H` inner product. The
//! recurrences below avoid ever applying `A_mg` itself: with `r` the true
//! residual and `rh = P_tri^{-1} r`, `a A_mg rh_u = r_u` and
//! `B rh_u = S rh_p + r_p`, so every `H` product reduces to quantities the
//! iteration already carries.

use std::time::Instant;

use super::{NullSpace, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm};
use crate::precond::{BlockPrecon, PreconKind};
use crate::system::{SaddlePoint, SolveReport};

/// Relative residual beyond which an indefinite run counts as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

pub fn bpcg_solve<S: SaddlePoint + NullSpace>(
    op: &S,
    prec: &BlockPrecon,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    bpcg_solve_monitored(op, prec, b, cfg, |_, _| {})
}

/// As [`bpcg_solve`], calling `monitor(iteration, x)` after every update.
pub fn bpcg_solve_monitored<S: SaddlePoint + NullSpace>(
    op: &S,
    prec: &BlockPrecon,
    b: &[f64],
    cfg: &SolverConfig,
    mut monitor: impl FnMut(usize, &[f64]),
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let a = match prec.kind {
        PreconKind::Tri { a } => a,
        PreconKind::Diag => {
            return Err(Error::Config("BPCG needs the block-triangular preconditioner".into()))
        }
    };
    let lay = op.layout();
    let (nu, np) = (lay.u_len(), lay.p_len());
    let mut report = SolveReport::default();
    report.extra.insert("a".into(), a);
    let mut x = vec![0.0; lay.dim()];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        report.converged = true;
        report.rel_residuals.push(0.0);
        return Ok((x, report));
    }

    let (bu, bp) = lay.split(b);
    let mut r_u = bu.to_vec();
    let mut r_p = bp.to_vec();
    if cfg.project_pressure_constants {
        op.project_pressure(&mut r_p);
    }
    let mut rh_u = vec![0.0; nu];
    prec.apply_scaled_atilde_inv(&r_u, &mut rh_u);
    let mut a_rh_u = vec![0.0; nu];
    op.apply_a(&rh_u, &mut a_rh_u);
    let mut b_du = vec![0.0; np];
    op.apply_b(&rh_u, &mut b_du);
    let mut rh_p = vec![0.0; np];
    let t: Vec<f64> = b_du.iter().zip(&r_p).map(|(x, y)| x - y).collect();
    prec.apply_s_inv(&t, &mut rh_p);

    let mut d_u = rh_u.clone();
    let mut d_p = rh_p.clone();
    let mut v = a_rh_u.clone();
    let mut s_rh_p = vec![0.0; np];
    prec.apply_s(&rh_p, &mut s_rh_p);
    let mut rho = dot(&rh_u, &a_rh_u) - dot(&rh_u, &r_u) + dot(&rh_p, &s_rh_p);

    let mut q_u = vec![0.0; nu];
    let mut aq_u = vec![0.0; nu];
    let mut q_p = vec![0.0; np];
    let mut bq_u = vec![0.0; np];
    let mut cd_u = vec![0.0; nu];
    let mut s_dp = vec![0.0; np];
    let mut rel = 1.0;
    report.rel_residuals.push(rel);
    let check = cfg.check_interval.max(1);
    let mut indefinite_steps = 0usize;

    for it in 1..=cfg.max_iter {
        // C d velocity part, then q = P_tri^{-1} C d
        cd_u.copy_from_slice(&v);
        op.apply_bt_add(&d_p, &mut cd_u);
        prec.apply_scaled_atilde_inv(&cd_u, &mut q_u);
        op.apply_a(&q_u, &mut aq_u);
        op.apply_b(&q_u, &mut bq_u);
        for (bq, bd) in bq_u.iter_mut().zip(&b_du) {
            *bq -= bd;
        }
        prec.apply_s_inv(&bq_u, &mut q_p);

        prec.apply_s(&d_p, &mut s_dp);
        let denom = dot(&d_u, &aq_u) - dot(&d_u, &cd_u) + dot(&q_p, &s_dp);
        if !(denom > 0.0) {
            let dd = dot(&d_u, &d_u) + dot(&d_p, &d_p);
            let err = Error::Positivity {
                iteration: it,
                a,
                rayleigh: denom / dd,
            };
            if !cfg.allow_indefinite || denom == 0.0 || !denom.is_finite() {
                return Err(err);
            }
            if indefinite_steps == 0 {
                log::warn!("{err}; continuing");
            }
            indefinite_steps += 1;
        }
        let alpha = rho / denom;

        let (xu, xp) = lay.split_mut(&mut x);
        axpy(alpha, &d_u, xu);
        axpy(alpha, &d_p, xp);
        axpy(-alpha, &q_u, &mut rh_u);
        axpy(-alpha, &q_p, &mut rh_p);
        axpy(-alpha, &aq_u, &mut a_rh_u);
        axpy(-alpha, &cd_u, &mut r_u);
        axpy(-alpha, &b_du, &mut r_p);
        if cfg.project_pressure_constants {
            // Both are orthogonal to the constants in exact arithmetic; the
            // recurrence for B d_u amplifies any drift.
            op.project_pressure(&mut r_p);
            op.project_pressure_weighted(&mut rh_p, &prec.dp);
        }
        rel = (dot(&r_u, &r_u) + dot(&r_p, &r_p)).sqrt() / bnorm;

        let mut done = false;
        if rel <= cfg.tol || it % check == 0 || it == cfg.max_iter {
            let mut cx = vec![0.0; lay.dim()];
            op.apply_c(&x, &mut cx);
            let res: Vec<f64> = b.iter().zip(&cx).map(|(b, c)| b - c).collect();
            rel = norm(&res) / bnorm;
            done = rel <= cfg.tol;
        }
        if !(rel < DIVERGENCE_LIMIT) {
            return Err(Error::Positivity {
                iteration: it,
                a,
                rayleigh: f64::NAN,
            });
        }
        if cfg.record_history {
            report.rel_residuals.push(rel);
        }
        report.iterations = it;
        monitor(it, &x);
        if done {
            report.converged = true;
            break;
        }

        prec.apply_s(&rh_p, &mut s_rh_p);
        let rho_new = dot(&rh_u, &a_rh_u) - dot(&rh_u, &r_u) + dot(&rh_p, &s_rh_p);
        let beta = rho_new / rho;
        rho = rho_new;
        for i in 0..nu {
            d_u[i] = rh_u[i] + beta * d_u[i];
            v[i] = a_rh_u[i] + beta * v[i];
        }
        for i in 0..np {
            d_p[i] = rh_p[i] + beta * d_p[i];
            b_du[i] = s_rh_p[i] + r_p[i] + beta * b_du[i];
        }
        if cfg.project_pressure_constants {
            op.project_pressure(&mut b_du);
        }
    }
    if !cfg.record_history {
        report.rel_residuals.push(rel);
    }
    if indefinite_steps > 0 {
        report.extra.insert("indefinite_steps".into(), indefinite_steps as f64);
    }
    op.normalize(&mut x);
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((x, report))
}
