//! Preconditioned MINRES (Paige-Saunders) with Euclidean residual tracking.

use std::time::Instant;

use super::{NullSpace, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, random_vector, LinearOperator};
use crate::system::SolveReport;

/// Per-iteration state handed to a monitor.
pub struct MinresStep<'a> {
    pub iteration: usize,
    pub x: &'a [f64],
    /// Residual norm in the preconditioner-inverse norm (the quantity
    /// MINRES minimizes).
    pub precond_residual: f64,
    pub rel_residual: f64,
}

pub fn minres_solve(
    c: &impl LinearOperator,
    p: &impl LinearOperator,
    b: &[f64],
    cfg: &SolverConfig,
    null: &impl NullSpace,
) -> Result<(Vec<f64>, SolveReport)> {
    minres_solve_monitored(c, p, b, cfg, null, |_| {})
}

fn check_symmetry(p: &impl LinearOperator) -> Result<()> {
    let n = p.dim();
    let r = random_vector(n, 0x5eed);
    let s = random_vector(n, 0x5eee);
    let pr = p.apply_new(&r);
    let ps = p.apply_new(&s);
    let (a, b) = (dot(&pr, &s), dot(&r, &ps));
    let scale = norm(&pr) * norm(&s);
    if (a - b).abs() > 1e-8 * scale {
        return Err(Error::Config(format!(
            "preconditioner is not symmetric: <Pr,s> = {a:e}, <r,Ps> = {b:e}"
        )));
    }
    Ok(())
}

pub fn minres_solve_monitored(
    c: &impl LinearOperator,
    p: &impl LinearOperator,
    b: &[f64],
    cfg: &SolverConfig,
    null: &impl NullSpace,
    mut monitor: impl FnMut(&MinresStep),
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = b.len();
    let mut report = SolveReport::default();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        report.converged = true;
        report.rel_residuals.push(0.0);
        return Ok((x, report));
    }
    check_symmetry(p)?;

    let project = |v: &mut [f64]| {
        if cfg.project_pressure_constants {
            null.project(v);
        }
    };
    let mut r1 = b.to_vec();
    project(&mut r1);
    let mut r2 = r1.clone();
    let mut y = p.apply_new(&r1);
    let beta1 = dot(&r1, &y);
    if beta1 <= 0.0 {
        return Err(Error::Config("preconditioner is not positive definite".into()));
    }
    let beta1 = beta1.sqrt();

    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0, 0.0);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w1;
    let mut w2 = vec![0.0; n];
    let mut cw = vec![0.0; n];
    let mut cw2 = vec![0.0; n];
    let mut cw1;
    let mut v = vec![0.0; n];
    let mut cv = vec![0.0; n];
    // Euclidean residual b - C x, maintained alongside x.
    let mut res = b.to_vec();
    let mut rel = 1.0;
    report.rel_residuals.push(rel);

    let check = cfg.check_interval.max(1);
    for it in 1..=cfg.max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        c.apply(&v, &mut cv);
        let mut ynew = cv.clone();
        if it >= 2 {
            axpy(-beta / oldb, &r1, &mut ynew);
        }
        let alfa = dot(&v, &ynew);
        axpy(-alfa / beta, &r2, &mut ynew);
        project(&mut ynew);
        r1 = std::mem::replace(&mut r2, ynew);
        p.apply(&r2, &mut y);
        oldb = beta;
        let bb = dot(&r2, &y);
        if bb < 0.0 {
            return Err(Error::Config("preconditioner is not positive definite".into()));
        }
        beta = bb.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        cw1 = std::mem::replace(&mut cw2, std::mem::take(&mut cw));
        w = (0..n)
            .map(|i| (v[i] - oldeps * w1[i] - delta * w2[i]) * denom)
            .collect();
        cw = (0..n)
            .map(|i| (cv[i] - oldeps * cw1[i] - delta * cw2[i]) * denom)
            .collect();
        axpy(phi, &w, &mut x);
        axpy(-phi, &cw, &mut res);
        rel = norm(&res) / bnorm;

        let exhausted = beta <= f64::EPSILON * beta1;
        let mut done = false;
        if rel <= cfg.tol || it % check == 0 || exhausted || it == cfg.max_iter {
            res = b.to_vec();
            let cx = c.apply_new(&x);
            axpy(-1.0, &cx, &mut res);
            rel = norm(&res) / bnorm;
            done = rel <= cfg.tol;
        }
        if cfg.record_history {
            report.rel_residuals.push(rel);
        }
        report.iterations = it;
        monitor(&MinresStep {
            iteration: it,
            x: &x,
            precond_residual: phibar,
            rel_residual: rel,
        });
        if done || exhausted {
            report.converged = done;
            break;
        }
    }
    if !cfg.record_history {
        report.rel_residuals.push(rel);
    }
    null.normalize(&mut x);
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{true_relative_residual, Regular};
    use nalgebra::DMatrix;

    fn indefinite(n: usize) -> DMatrix<f64> {
        let q = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let qr = q.qr().q();
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                if i % 3 == 0 { -(1.0 + i as f64) } else { 1.0 + i as f64 }
            } else {
                0.0
            }
        });
        &qr * d * qr.transpose()
    }

    #[test]
    fn solves_symmetric_indefinite() {
        let a = indefinite(40);
        let id = DMatrix::<f64>::identity(40, 40);
        let b = random_vector(40, 1);
        let cfg = SolverConfig {
            tol: 1e-10,
            ..SolverConfig::default()
        };
        let (x, rep) = minres_solve(&a, &id, &b, &cfg, &Regular).unwrap();
        assert!(rep.converged);
        assert!(true_relative_residual(&a, &b, &x) <= 1e-10);
        assert!(rep.iterations <= 45);
    }

    #[test]
    fn zero_rhs() {
        let a = indefinite(10);
        let id = DMatrix::<f64>::identity(10, 10);
        let (x, rep) = minres_solve(&a, &id, &[0.0; 10], &SolverConfig::default(), &Regular).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_asymmetric_preconditioner() {
        let a = indefinite(10);
        let mut p = DMatrix::<f64>::identity(10, 10);
        p[(0, 1)] = 0.5;
        let b = random_vector(10, 2);
        assert!(matches!(
            minres_solve(&a, &p, &b, &SolverConfig::default(), &Regular),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn preconditioned_residual_is_monotone() {
        let a = indefinite(40);
        let p = DMatrix::from_fn(40, 40, |i, j| if i == j { 1.0 / (1.0 + i as f64) } else { 0.0 });
        let b = random_vector(40, 3);
        let mut hist = Vec::new();
        let cfg = SolverConfig {
            tol: 1e-10,
            ..SolverConfig::default()
        };
        let (_, rep) =
            minres_solve_monitored(&a, &p, &b, &cfg, &Regular, |s| hist.push(s.precond_residual)).unwrap();
        assert!(rep.converged);
        assert!(hist.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }
}
