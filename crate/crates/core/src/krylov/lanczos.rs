//! Lanczos for the extreme eigenvalues of the pencil `(A, A_mg)`, i.e. of
//! `A_mg^{-1} A`, given `A` and the V-cycle `K = A_mg^{-1}`.
//!
//! Runs on `A K` in the `K` inner product (equivalently on `K A` in the
//! `A_mg` inner product), with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{dot, random_vector, LinearOperator};

pub const DEFAULT_MAX_STEPS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigEstimate {
    pub lambda_min: f64,
    /// Largest Ritz value of the same run (not necessarily converged).
    pub lambda_max: f64,
    /// Mesh level of the operators the estimate was computed on.
    pub level_used: usize,
    pub lanczos_steps: usize,
    /// Relative eigenresidual of the smallest Ritz pair.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub min: f64,
    pub max: f64,
    pub min_residual: f64,
    pub max_residual: f64,
    pub steps: usize,
}

struct Ritz {
    min: f64,
    max: f64,
    min_residual: f64,
    max_residual: f64,
}

fn ritz(alphas: &[f64], betas: &[f64], beta_next: f64) -> Ritz {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i.abs_diff(j) == 1 {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (mut imin, mut imax) = (0, 0);
    for i in 0..m {
        if eig.eigenvalues[i] < eig.eigenvalues[imin] {
            imin = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[imax] {
            imax = i;
        }
    }
    let (min, max) = (eig.eigenvalues[imin], eig.eigenvalues[imax]);
    Ritz {
        min,
        max,
        min_residual: (beta_next * eig.eigenvectors[(m - 1, imin)]).abs() / min.abs(),
        max_residual: (beta_next * eig.eigenvectors[(m - 1, imax)]).abs() / max.abs(),
    }
}

fn lanczos(
    a: &impl LinearOperator,
    k: &impl LinearOperator,
    max_steps: usize,
    seed: u64,
    done: impl Fn(&Ritz) -> bool,
) -> (Ritz, usize, bool) {
    let n = a.dim();
    let mut z = random_vector(n, seed);
    let mut kz = k.apply_new(&z);
    let nrm = dot(&z, &kz).sqrt();
    z.iter_mut().for_each(|v| *v /= nrm);
    kz.iter_mut().for_each(|v| *v /= nrm);
    let mut zs = vec![z];
    let mut kzs = vec![kz];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut kw = vec![0.0; n];
    let steps = max_steps.min(n);
    let mut last = None;
    for j in 0..steps {
        a.apply(&kzs[j], &mut w);
        let alpha = dot(&w, &kzs[j]);
        for (wi, zi) in w.iter_mut().zip(&zs[j]) {
            *wi -= alpha * zi;
        }
        if j > 0 {
            let b = betas[j - 1];
            for (wi, zi) in w.iter_mut().zip(&zs[j - 1]) {
                *wi -= b * zi;
            }
        }
        k.apply(&w, &mut kw);
        for _ in 0..2 {
            for (zi, kzi) in zs.iter().zip(&kzs) {
                let c = dot(&w, kzi);
                for ((wv, kwv), (z, kz)) in w.iter_mut().zip(kw.iter_mut()).zip(zi.iter().zip(kzi)) {
                    *wv -= c * z;
                    *kwv -= c * kz;
                }
            }
        }
        alphas.push(alpha);
        let bb = dot(&w, &kw);
        let beta = if bb > 0.0 { bb.sqrt() } else { 0.0 };
        let m = j + 1;
        let exhausted = beta <= 1e-12 * alpha.abs();
        if m < 40 || m % 5 == 0 || exhausted || m == steps {
            let r = ritz(&alphas, &betas, beta);
            if exhausted || done(&r) {
                return (r, m, true);
            }
            last = Some(r);
        }
        betas.push(beta);
        zs.push(w.iter().map(|v| v / beta).collect());
        kzs.push(kw.iter().map(|v| v / beta).collect());
    }
    let r = last.unwrap_or_else(|| ritz(&alphas, &betas[..alphas.len() - 1], 0.0));
    (r, steps, false)
}

/// Smallest eigenvalue of `A_mg^{-1} A`, where `k` applies `A_mg^{-1}`.
/// Converged when the relative eigenresidual is at most `tol`.
pub fn estimate_lambda_min(
    a: &impl LinearOperator,
    k: &impl LinearOperator,
    tol: f64,
    max_steps: usize,
) -> Result<EigEstimate> {
    let (r, steps, ok) = lanczos(a, k, max_steps, 0x1a2c, |r| r.min_residual <= tol);
    if !ok || !(r.min > 0.0) {
        return Err(Error::Estimation {
            steps,
            best: r.min,
            residual: r.min_residual,
        });
    }
    Ok(EigEstimate {
        lambda_min: r.min,
        lambda_max: r.max,
        level_used: 0,
        lanczos_steps: steps,
        residual: r.min_residual,
    })
}

/// Both extreme eigenvalues of `A_mg^{-1} A` to relative residual `tol`.
pub fn lanczos_extremes(
    a: &impl LinearOperator,
    k: &impl LinearOperator,
    tol: f64,
    max_steps: usize,
) -> Result<Extremes> {
    let (r, steps, ok) = lanczos(a, k, max_steps, 0x1a2d, |r| {
        r.min_residual <= tol && r.max_residual <= tol
    });
    if !ok {
        return Err(Error::Estimation {
            steps,
            best: r.min,
            residual: r.min_residual.max(r.max_residual),
        });
    }
    Ok(Extremes {
        min: r.min,
        max: r.max,
        min_residual: r.min_residual,
        max_residual: r.max_residual,
        steps,
    })
}
