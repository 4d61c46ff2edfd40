//! Shared fixtures and dense oracles for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use sgstokes::experiment::{Problem, ProblemSpec};
use sgstokes::linalg::{to_dense, LinearOperator};
use sgstokes::multigrid::MgConfig;
use sgstokes::precond::{AtildeInverse, BlockPrecon};
use sgstokes::system::{SgfeOperator, EXPLICIT_CAP};

/// M = 2, k = 1 on the level-0 mesh.
pub fn small_spec(sigma_mu: f64) -> ProblemSpec {
    ProblemSpec {
        level: 0,
        m: 2,
        k: 1,
        sigma_mu,
        ..ProblemSpec::default()
    }
}

pub fn small_problem(sigma_mu: f64) -> Problem {
    Problem::build(small_spec(sigma_mu), MgConfig::default()).unwrap()
}

/// Dense solve of the singular saddle point system, bordered with one
/// zero-mean (Euclidean) constraint per pressure mode. The result has
/// `M_p`-mean-free pressure modes.
pub fn direct_solve(op: &SgfeOperator, b: &[f64]) -> Vec<f64> {
    let c = op.assemble_explicit(EXPLICIT_CAP).unwrap().to_dense();
    let lay = op.layout;
    let n = lay.dim();
    let nm = lay.n_modes;
    let mut k = DMatrix::zeros(n + nm, n + nm);
    k.view_mut((0, 0), (n, n)).copy_from(&c);
    for j in 0..nm {
        for i in lay.p_mode(j) {
            k[(n + j, lay.u_len() + i)] = 1.0;
            k[(lay.u_len() + i, n + j)] = 1.0;
        }
    }
    let mut rhs = DVector::zeros(n + nm);
    rhs.rows_mut(0, n).copy_from_slice(b);
    let sol = k.lu().solve(&rhs).expect("bordered system is regular");
    let mut x = sol.rows(0, n).iter().copied().collect::<Vec<_>>();
    op.remove_pressure_means(&mut x);
    x
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    d / n
}

/// Dense `A_mg` (inverse of the dense V-cycle block operator).
pub fn dense_atilde(prec: &BlockPrecon) -> DMatrix<f64> {
    let k = to_dense(&AtildeInverse(prec));
    let k = (&k + k.transpose()) * 0.5;
    k.try_inverse().expect("V-cycle operator is invertible")
}

/// Dense `H = diag(A - a A_mg, S)`.
pub fn dense_h(op: &SgfeOperator, prec: &BlockPrecon, atilde: &DMatrix<f64>) -> DMatrix<f64> {
    let lay = op.layout;
    let n = lay.dim();
    let nu = lay.u_len();
    let c = op.assemble_explicit(EXPLICIT_CAP).unwrap().to_dense();
    let mut h = DMatrix::zeros(n, n);
    let a_blk = c.view((0, 0), (nu, nu)) - atilde * prec.a();
    h.view_mut((0, 0), (nu, nu)).copy_from(&a_blk);
    for j in 0..lay.n_modes {
        for (i, d) in lay.p_mode(j).zip(&prec.dp) {
            h[(nu + i, nu + i)] = *d;
        }
    }
    h
}

pub fn dense<T: LinearOperator>(op: &T) -> DMatrix<f64> {
    to_dense(op)
}

pub fn arc<T>(x: T) -> Arc<T> {
    Arc::new(x)
}

/// Eigenvalues (descending) of `exp(-|s - t| / b)` on `[-0.5, 0.5]` from a
/// trapezoid Nyström discretization with `n` points.
pub fn nystrom_eigenvalues(b: f64, n: usize, count: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    let s: Vec<f64> = (0..n).map(|i| -0.5 + i as f64 * h).collect();
    let w: Vec<f64> = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect();
    // symmetric form W^1/2 K W^1/2
    let k = DMatrix::from_fn(n, n, |i, j| (w[i] * w[j]).sqrt() * (-(s[i] - s[j]).abs() / b).exp());
    let mut ev: Vec<f64> = k.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.truncate(count);
    ev
}

/// Nyström eigenvalues on 401 and 201 points combined by Richardson
/// extrapolation in `h^2`.
pub fn nystrom_extrapolated(b: f64, count: usize) -> Vec<f64> {
    let fine = nystrom_eigenvalues(b, 401, count);
    let coarse = nystrom_eigenvalues(b, 201, count);
    fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
}

/// `E[f(Y)]`, `Y ~ N(0, I_m)`, by an `n`-point tensor Gauss-Hermite rule.
pub fn gauss_hermite_expectation(m: usize, n: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let (x, w) = sgstokes::quadrature::gauss_hermite(n);
    let mut idx = vec![0usize; m];
    let mut y = vec![0.0; m];
    let mut total = 0.0;
    loop {
        let mut wt = 1.0;
        for d in 0..m {
            y[d] = x[idx[d]];
            wt *= w[idx[d]];
        }
        total += wt * f(&y);
        let mut d = 0;
        loop {
            if d == m {
                return total;
            }
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Extreme eigenvalues of `diag(M_p)^-1 M_p` on the given mesh level.
pub fn pressure_scaling_extremes(level: usize) -> (f64, f64) {
    let space = sgstokes::fe::build_spaces(sgstokes::mesh::build_mesh(level).unwrap());
    let (mp, _) = sgstokes::fe::assemble_pressure_mass(&space);
    let m = mp.to_dense();
    let d: Vec<f64> = mp.diagonal().iter().map(|v| 1.0 / v.sqrt()).collect();
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)] * d[j]);
    let ev = scaled.symmetric_eigenvalues();
    (ev.min(), ev.max())
}

/// `[delta, Delta]` of `A_mg^{-1} A` for the unit-weight Laplacian on the
/// given level, by Lanczos.
pub fn multigrid_interval(level: usize) -> (f64, f64) {
    let mg = sgstokes::multigrid::MgHierarchy::new(level, MgConfig::default()).unwrap();
    let e = sgstokes::krylov::lanczos_extremes(&mg.finest().a, &mg, 1e-4, 400).unwrap();
    (e.min, e.max)
}

/// Eigenvalues (ascending) of the symmetric matrix `x`.
pub fn sorted_eigenvalues(x: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = x.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Quantities behind the H-conditions on the small instance.
pub struct HCheck {
    /// Smallest eigenvalue of `H`.
    pub h_min: f64,
    /// Smallest eigenvalue of its velocity block `A - a A_mg`.
    pub hu_min: f64,
    /// `||H Mo - Mo^T H||_F / ||H Mo||_F` with `Mo = P_tri^-1 C`.
    pub asymmetry: f64,
    /// `(H Mo + Mo^T H) / 2`.
    pub hmo_sym: DMatrix<f64>,
}

pub fn h_check(p: &Problem, a: f64) -> HCheck {
    let prec = p.tri_precon(a).unwrap();
    let pinv = dense(&prec.inverse(&p.op));
    let c = p.op.assemble_explicit(EXPLICIT_CAP).unwrap().to_dense();
    let h = dense_h(&p.op, &prec, &dense_atilde(&prec));
    let hmo = &h * (&pinv * &c);
    let asymmetry = (&hmo - hmo.transpose()).norm() / hmo.norm();
    let nu = p.op.layout.u_len();
    // H is block diagonal with a diagonal pressure block
    let hu_min = sorted_eigenvalues(&h.view((0, 0), (nu, nu)).into_owned())[0];
    let dp_min = prec.dp.iter().copied().fold(f64::INFINITY, f64::min);
    HCheck {
        h_min: hu_min.min(dp_min),
        hu_min,
        asymmetry,
        hmo_sym: (&hmo + hmo.transpose()) * 0.5,
    }
}

/// Deterministic unit-viscosity cavity solution on the given level by a
/// dense direct solve of the FE system: velocity on all P2 nodes
/// (`2 n_u`) and `M_p`-mean-free pressure.
pub fn deterministic_stokes(level: usize) -> (sgstokes::fe::TaylorHoodSpace, Vec<f64>, Vec<f64>) {
    use sgstokes::fe::{assemble_divergence, assemble_pressure_mass, assemble_weighted_laplacian, lift_boundary};
    let space = sgstokes::fe::build_spaces(sgstokes::mesh::build_mesh(level).unwrap());
    let a = assemble_weighted_laplacian(&space, |_| 1.0).unwrap().to_dense();
    let b = assemble_divergence(&space).to_dense();
    let w = lift_boundary(&space);
    let n_u = space.n_u;
    let free: Vec<usize> = (0..2)
        .flat_map(|c| space.free_nodes.iter().map(move |&i| c * n_u + i))
        .collect();
    let (nf, np) = (free.len(), space.n_p);
    let n = nf + np + 1;
    let mut k = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    let aw = &a * DVector::from_column_slice(&w);
    let bw = &b * DVector::from_column_slice(&w);
    for (i, &fi) in free.iter().enumerate() {
        for (j, &fj) in free.iter().enumerate() {
            k[(i, j)] = a[(fi, fj)];
        }
        for q in 0..np {
            k[(i, nf + q)] = b[(q, fi)];
            k[(nf + q, i)] = b[(q, fi)];
        }
        rhs[i] = -aw[fi];
    }
    for q in 0..np {
        rhs[nf + q] = -bw[q];
        k[(nf + q, n - 1)] = 1.0;
        k[(n - 1, nf + q)] = 1.0;
    }
    let sol = k.lu().solve(&rhs).expect("bordered Stokes system is regular");
    let mut u = w;
    for (i, &fi) in free.iter().enumerate() {
        u[fi] = sol[i];
    }
    let mut p: Vec<f64> = (0..np).map(|q| sol[nf + q]).collect();
    let (mp, _) = assemble_pressure_mass(&space);
    let m1 = mp.mul_vec(&vec![1.0; np]);
    let mean = p.iter().zip(&m1).map(|(a, b)| a * b).sum::<f64>() / m1.iter().sum::<f64>();
    p.iter_mut().for_each(|v| *v -= mean);
    (space, u, p)
}
