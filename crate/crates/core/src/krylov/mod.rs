//! Krylov solvers for the SGFE saddle point system and the Lanczos
//! estimator for the scaling of the block-triangular preconditioner.

mod bpcg;
mod ipcg;
mod lanczos;
mod minres;

pub use bpcg::{bpcg_solve, bpcg_solve_monitored, DIVERGENCE_LIMIT};
pub use ipcg::reference_ipcg;
pub use lanczos::{estimate_lambda_min, lanczos_extremes, EigEstimate, Extremes, DEFAULT_MAX_STEPS};
pub use minres::{minres_solve, minres_solve_monitored};

use crate::linalg::{axpy, dot, norm, LinearOperator};
use crate::system::{project_pressure_blocks, project_pressure_constants, SgfeOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative Euclidean residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub record_history: bool,
    /// Remove per-mode pressure constants from residual vectors.
    pub project_pressure_constants: bool,
    /// Iterations between explicit recomputations of `b - C x`.
    pub check_interval: usize,
    /// BPCG only: keep iterating when `<d, H P^-1 C d> <= 0` instead of
    /// aborting. Exact breakdown and divergence still abort.
    pub allow_indefinite: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 1000,
            record_history: true,
            project_pressure_constants: true,
            check_interval: 5,
            allow_indefinite: false,
        }
    }
}

/// Handling of a known null space of the system operator.
pub trait NullSpace {
    /// Projects a residual-space vector off the null space.
    fn project(&self, r: &mut [f64]);

    /// As [`NullSpace::project`] on the pressure part alone.
    fn project_pressure(&self, _r_p: &mut [f64]) {}

    /// Removes from each pressure mode its component along the constants
    /// that is orthogonal in the inner product `diag(weights)`.
    fn project_pressure_weighted(&self, _p: &mut [f64], _weights: &[f64]) {}

    /// Normalizes a solution (removes its null space component).
    fn normalize(&self, x: &mut [f64]);
}

/// No null space.
pub struct Regular;

impl NullSpace for Regular {
    fn project(&self, _: &mut [f64]) {}
    fn normalize(&self, _: &mut [f64]) {}
}

impl NullSpace for SgfeOperator {
    fn project(&self, r: &mut [f64]) {
        project_pressure_constants(self.layout, r);
    }

    fn project_pressure(&self, r_p: &mut [f64]) {
        project_pressure_blocks(self.layout.n_p, r_p);
    }

    fn project_pressure_weighted(&self, p: &mut [f64], weights: &[f64]) {
        let total: f64 = weights.iter().sum();
        for blk in p.chunks_exact_mut(self.layout.n_p) {
            let mean = blk.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
            blk.iter_mut().for_each(|v| *v -= mean);
        }
    }

    fn normalize(&self, x: &mut [f64]) {
        self.remove_pressure_means(x);
    }
}

/// `||b - C x|| / ||b||` computed explicitly.
pub fn true_relative_residual(c: &impl LinearOperator, b: &[f64], x: &[f64]) -> f64 {
    let mut r = c.apply_new(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm(&r) / norm(b)
}

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Plain preconditioned CG for an SPD operator `a` with SPD preconditioner
/// `m` (applied as `m * r`).
pub fn pcg(a: &impl LinearOperator, m: &impl LinearOperator, b: &[f64], tol: f64, max_iter: usize) -> PcgOutcome {
    let n = b.len();
    let bn = norm(b);
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return PcgOutcome {
            x,
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let mut r = b.to_vec();
    let mut z = m.apply_new(&r);
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=max_iter {
        a.apply(&d, &mut q);
        let alpha = rz / dot(&d, &q);
        axpy(alpha, &d, &mut x);
        axpy(-alpha, &q, &mut r);
        rel = norm(&r) / bn;
        if rel <= tol {
            return PcgOutcome {
                x,
                iterations: it,
                rel_residual: rel,
                converged: true,
            };
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (di, zi) in d.iter_mut().zip(&z) {
            *di = zi + beta * *di;
        }
    }
    PcgOutcome {
        x,
        iterations: max_iter,
        rel_residual: rel,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn pcg_solves_spd_system() {
        let n = 30;
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let id = DMatrix::<f64>::identity(n, n);
        let b = crate::linalg::random_vector(n, 9);
        let out = pcg(&a, &id, &b, 1e-12, 100);
        assert!(out.converged);
        assert!(true_relative_residual(&a, &b, &out.x) < 1e-11);
    }
}
