//! The stochastic Galerkin saddle point operator
//! `C = [sum_q G_q (x) A_q, I (x) B^T; I (x) B, 0]` in matrix-free form.
//!
//! Unknowns are ordered `[u; p]`. The velocity part is mode-major: for each
//! chaos mode the free `x_1` dofs then the free `x_2` dofs. The pressure part
//! is mode-major as well.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;
use std::sync::Arc;

use crate::chaos::{assemble_all_g, build_basis, moments, GMatrix, SgBasis};
use crate::error::{Error, Result};
use crate::fe::{assemble_divergence, assemble_pressure_mass, LaplacianKernel, TaylorHoodSpace};
use crate::kle::KlField;
use crate::linalg::LinearOperator;
use crate::sparse::{sub_pattern, SparseMatrix};

/// Default cap on the explicit matrix dimension (oracle use only).
pub const EXPLICIT_CAP: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SgLayout {
    pub n_modes: usize,
    /// Free scalar velocity nodes per component.
    pub n_free: usize,
    pub n_p: usize,
}

impl SgLayout {
    pub fn vel_block(&self) -> usize {
        2 * self.n_free
    }

    pub fn u_len(&self) -> usize {
        self.n_modes * self.vel_block()
    }

    pub fn p_len(&self) -> usize {
        self.n_modes * self.n_p
    }

    pub fn dim(&self) -> usize {
        self.u_len() + self.p_len()
    }

    /// Velocity block of mode `j` within the velocity part.
    pub fn u_mode(&self, j: usize) -> Range<usize> {
        j * self.vel_block()..(j + 1) * self.vel_block()
    }

    /// Pressure block of mode `j` within the pressure part.
    pub fn p_mode(&self, j: usize) -> Range<usize> {
        j * self.n_p..(j + 1) * self.n_p
    }

    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.u_len())
    }

    pub fn split_mut<'a>(&self, x: &'a mut [f64]) -> (&'a mut [f64], &'a mut [f64]) {
        x.split_at_mut(self.u_len())
    }
}

/// Access to the blocks of a saddle point operator `[A B^T; B 0]`.
pub trait SaddlePoint {
    fn layout(&self) -> SgLayout;

    /// `y <- A u` on the velocity part.
    fn apply_a(&self, u: &[f64], y: &mut [f64]);

    /// `y <- B u`, velocity to pressure.
    fn apply_b(&self, u: &[f64], y: &mut [f64]);

    /// `y <- y + B^T p`.
    fn apply_bt_add(&self, p: &[f64], y: &mut [f64]);

    fn apply_c(&self, x: &[f64], y: &mut [f64]) {
        let lay = self.layout();
        let (xu, xp) = lay.split(x);
        let (yu, yp) = lay.split_mut(y);
        self.apply_a(xu, yu);
        self.apply_bt_add(xp, yu);
        self.apply_b(xu, yp);
    }
}

pub struct SgfeOperator {
    pub space: Arc<TaylorHoodSpace>,
    pub basis: Arc<SgBasis>,
    pub basis_nu: Arc<SgBasis>,
    /// `G_q` for every `q` of the doubled-degree basis; `g[0]` is the identity.
    pub g: Vec<GMatrix>,
    /// Scalar weighted Laplacians on free x free nodes, one per `q`.
    pub a_free: Vec<SparseMatrix>,
    /// Scalar couplings free x boundary, one per `q`.
    a_bdry: Vec<SparseMatrix>,
    /// Divergence on free velocity columns, `n_p x 2 n_free`.
    pub b: SparseMatrix,
    bt: SparseMatrix,
    /// Divergence on boundary velocity columns, `n_p x 2 n_bdry`.
    b_bdry: SparseMatrix,
    pub mp: SparseMatrix,
    pub dp: Vec<f64>,
    pub layout: SgLayout,
}

/// Dirichlet-eliminated SGFE operator for the given field and solution basis.
/// All `C(M + 2k, 2k)` chaos terms of the viscosity are kept.
pub fn build_operator(
    space: Arc<TaylorHoodSpace>,
    field: &KlField,
    basis: Arc<SgBasis>,
) -> Result<SgfeOperator> {
    if basis.m != field.m() {
        return Err(Error::Input(format!(
            "chaos basis has M = {}, field has M = {}",
            basis.m,
            field.m()
        )));
    }
    let basis_nu = Arc::new(build_basis(basis.m, 2 * basis.k)?);
    let g = assemble_all_g(&basis, &basis_nu)?;

    let kernel = LaplacianKernel::new(&space);
    let (ff_pattern, ff_gather) = sub_pattern(&kernel.pattern, &space.free_nodes, &space.free_nodes);
    let (fb_pattern, fb_gather) =
        sub_pattern(&kernel.pattern, &space.free_nodes, &space.boundary_nodes);
    let ff_pattern = Arc::new(ff_pattern);
    let fb_pattern = Arc::new(fb_pattern);

    let weights = ChaosWeights::new(field, &kernel.points);
    let mut a_free = Vec::with_capacity(basis_nu.size());
    let mut a_bdry = Vec::with_capacity(basis_nu.size());
    let mut w = vec![0.0; kernel.points.len()];
    for q in &basis_nu.indices {
        weights.fill(q.degrees(), &mut w);
        let full = kernel.assemble(&w)?;
        a_free.push(SparseMatrix {
            pattern: Arc::clone(&ff_pattern),
            values: ff_gather.iter().map(|&k| full.values[k]).collect(),
        });
        a_bdry.push(SparseMatrix {
            pattern: Arc::clone(&fb_pattern),
            values: fb_gather.iter().map(|&k| full.values[k]).collect(),
        });
    }

    let n_u = space.n_u;
    let vector_cols = |nodes: &[usize]| -> Vec<usize> {
        nodes.iter().copied().chain(nodes.iter().map(|&i| n_u + i)).collect()
    };
    let b_full = assemble_divergence(&space);
    let p_rows: Vec<usize> = (0..space.n_p).collect();
    let b = b_full.submatrix(&p_rows, &vector_cols(&space.free_nodes));
    let b_bdry = b_full.submatrix(&p_rows, &vector_cols(&space.boundary_nodes));
    let bt = b.transpose();
    let (mp, dp_mat) = assemble_pressure_mass(&space);

    let layout = SgLayout {
        n_modes: basis.size(),
        n_free: space.free_nodes.len(),
        n_p: space.n_p,
    };
    Ok(SgfeOperator {
        a_free,
        a_bdry,
        b,
        bt,
        b_bdry,
        mp,
        dp: dp_mat.diagonal(),
        layout,
        g,
        basis,
        basis_nu,
        space,
    })
}

/// Chaos coefficients of the viscosity at a fixed set of points, evaluated
/// for one multi-index at a time.
struct ChaosWeights {
    base: Vec<f64>,
    terms: Vec<Vec<f64>>,
}

impl ChaosWeights {
    fn new(field: &KlField, points: &[crate::mesh::Point]) -> Self {
        let terms: Vec<Vec<f64>> = points.iter().map(|&x| field.scaled_terms(x)).collect();
        let base = terms
            .iter()
            .map(|t| (field.mu0 + 0.5 * t.iter().map(|v| v * v).sum::<f64>()).exp())
            .collect();
        Self { base, terms }
    }

    fn fill(&self, q: &[u32], out: &mut [f64]) {
        let inv_sqrt_fact: Vec<f64> = q
            .iter()
            .map(|&k| 1.0 / (2..=k).map(f64::from).product::<f64>().sqrt())
            .collect();
        for ((o, b), t) in out.iter_mut().zip(&self.base).zip(&self.terms) {
            let mut v = *b;
            for ((&tm, &k), s) in t.iter().zip(q).zip(&inv_sqrt_fact) {
                if k > 0 {
                    v *= tm.powi(k as i32) * s;
                }
            }
            *o = v;
        }
    }
}

impl SgfeOperator {
    pub fn n_modes(&self) -> usize {
        self.layout.n_modes
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn n_free(&self) -> usize {
        self.layout.n_free
    }

    /// Right-hand side `-C_full (e_0 (x) w0)` restricted to the free dofs,
    /// for a velocity `w0` of length `2 n_u` on all P2 nodes.
    pub fn build_rhs(&self, w0: &[f64]) -> Vec<f64> {
        let sp = &self.space;
        let n_u = sp.n_u;
        assert_eq!(w0.len(), 2 * n_u);
        let nf = self.n_free();
        let nb = sp.boundary_nodes.len();
        let gather = |nodes: &[usize]| -> Vec<f64> {
            (0..2)
                .flat_map(|c| nodes.iter().map(move |&i| w0[c * n_u + i]))
                .collect()
        };
        let wf = gather(&sp.free_nodes);
        let wb = gather(&sp.boundary_nodes);

        let lay = self.layout;
        let mut rhs = vec![0.0; lay.dim()];
        let (ru, rp) = lay.split_mut(&mut rhs);
        let mut t = vec![0.0; 2 * nf];
        for (gq, (af, ab)) in self.g.iter().zip(self.a_free.iter().zip(&self.a_bdry)) {
            let col0: Vec<(usize, f64)> = gq.matrix.row(0).collect();
            if col0.is_empty() {
                continue;
            }
            for c in 0..2 {
                let tc = &mut t[c * nf..(c + 1) * nf];
                af.matvec(&wf[c * nf..(c + 1) * nf], tc);
                ab.matvec_add(1.0, &wb[c * nb..(c + 1) * nb], tc);
            }
            for (i, gij) in col0 {
                crate::linalg::axpy(-gij, &t, &mut ru[lay.u_mode(i)]);
            }
        }
        let p0 = &mut rp[lay.p_mode(0)];
        self.b.matvec_add(-1.0, &wf, p0);
        self.b_bdry.matvec_add(-1.0, &wb, p0);
        rhs
    }

    /// Explicit sparse saddle point matrix (test oracle).
    pub fn assemble_explicit(&self, cap: usize) -> Result<SparseMatrix> {
        let lay = self.layout;
        let n = lay.dim();
        if n > cap {
            return Err(Error::Resource {
                what: "explicit SGFE matrix dimension",
                needed: n,
                cap,
            });
        }
        let nf = self.n_free();
        let vb = lay.vel_block();
        let mut trip = Vec::new();
        for (gq, aq) in self.g.iter().zip(&self.a_free) {
            for (i, j, gij) in gq.matrix.triplets() {
                for (r, c, v) in aq.triplets() {
                    for comp in 0..2 {
                        trip.push((i * vb + comp * nf + r, j * vb + comp * nf + c, gij * v));
                    }
                }
            }
        }
        let u_len = lay.u_len();
        for j in 0..lay.n_modes {
            for (r, c, v) in self.b.triplets() {
                let (pr, uc) = (u_len + j * lay.n_p + r, j * vb + c);
                trip.push((pr, uc, v));
                trip.push((uc, pr, v));
            }
        }
        Ok(SparseMatrix::from_triplets(n, n, &trip))
    }

    /// `M_p`-weighted mean of each pressure mode.
    pub fn pressure_means(&self, x: &[f64]) -> Vec<f64> {
        let lay = self.layout;
        let (_, xp) = lay.split(x);
        let ones = vec![1.0; lay.n_p];
        let m1 = self.mp.mul_vec(&ones);
        let total: f64 = m1.iter().sum();
        (0..lay.n_modes)
            .map(|j| crate::linalg::dot(&m1, &xp[lay.p_mode(j)]) / total)
            .collect()
    }

    /// Subtracts the `M_p`-weighted mean from each pressure mode.
    pub fn remove_pressure_means(&self, x: &mut [f64]) {
        let means = self.pressure_means(x);
        let lay = self.layout;
        let (_, xp) = lay.split_mut(x);
        for (j, m) in means.into_iter().enumerate() {
            xp[lay.p_mode(j)].iter_mut().for_each(|v| *v -= m);
        }
    }

    /// Euclidean projection of each pressure mode onto vectors orthogonal
    /// to the constants.
    pub fn project_pressure_constants(&self, x: &mut [f64]) {
        project_pressure_constants(self.layout, x);
    }

    /// Velocity coefficients on all P2 nodes (`2 n_u` per mode, lifting
    /// added to mode 0) and pressure coefficients per mode.
    pub fn expand_solution(&self, x: &[f64], w0: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let sp = &self.space;
        let lay = self.layout;
        let nf = lay.n_free;
        let (xu, xp) = lay.split(x);
        let mut vel = Vec::with_capacity(lay.n_modes);
        let mut pre = Vec::with_capacity(lay.n_modes);
        for j in 0..lay.n_modes {
            let mut full = if j == 0 { w0.to_vec() } else { vec![0.0; 2 * sp.n_u] };
            let blk = &xu[lay.u_mode(j)];
            for c in 0..2 {
                for (k, &node) in sp.free_nodes.iter().enumerate() {
                    full[c * sp.n_u + node] = blk[c * nf + k];
                }
            }
            vel.push(full);
            pre.push(xp[lay.p_mode(j)].to_vec());
        }
        (vel, pre)
    }

    /// Mean and variance of velocity and pressure at the mesh vertices.
    pub fn postprocess_moments(&self, x: &[f64], w0: &[f64]) -> MomentFields {
        let (vel, pre) = self.expand_solution(x, w0);
        let sp = &self.space;
        let nv = sp.n_p;
        let mut out = MomentFields {
            points: sp.mesh.vertices.clone(),
            ..MomentFields::default()
        };
        let mut coeffs = vec![0.0; vel.len()];
        for v in 0..nv {
            for c in 0..2 {
                for (cj, mode) in coeffs.iter_mut().zip(&vel) {
                    *cj = mode[c * sp.n_u + v];
                }
                let (m, s2) = moments(&coeffs);
                out.mean_u[c].push(m);
                out.var_u[c].push(s2);
            }
            for (cj, mode) in coeffs.iter_mut().zip(&pre) {
                *cj = mode[v];
            }
            let (m, s2) = moments(&coeffs);
            out.mean_p.push(m);
            out.var_p.push(s2);
        }
        out
    }
}

pub fn project_pressure_constants(lay: SgLayout, x: &mut [f64]) {
    let (_, xp) = lay.split_mut(x);
    project_pressure_blocks(lay.n_p, xp);
}

/// Removes the arithmetic mean from each length-`n_p` block.
pub fn project_pressure_blocks(n_p: usize, p: &mut [f64]) {
    for blk in p.chunks_exact_mut(n_p) {
        let mean = blk.iter().sum::<f64>() / n_p as f64;
        blk.iter_mut().for_each(|v| *v -= mean);
    }
}

impl SaddlePoint for SgfeOperator {
    fn layout(&self) -> SgLayout {
        self.layout
    }

    fn apply_a(&self, u: &[f64], y: &mut [f64]) {
        let lay = self.layout;
        let nf = lay.n_free;
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut t = vec![0.0; lay.vel_block()];
        for (gq, aq) in self.g.iter().zip(&self.a_free) {
            for j in 0..lay.n_modes {
                let mut row = gq.matrix.row(j).peekable();
                if row.peek().is_none() {
                    continue;
                }
                let uj = &u[lay.u_mode(j)];
                for c in 0..2 {
                    aq.matvec(&uj[c * nf..(c + 1) * nf], &mut t[c * nf..(c + 1) * nf]);
                }
                // G_q is symmetric, so row j lists the modes fed by mode j.
                for (i, gij) in row {
                    crate::linalg::axpy(gij, &t, &mut y[lay.u_mode(i)]);
                }
            }
        }
    }

    fn apply_b(&self, u: &[f64], y: &mut [f64]) {
        let lay = self.layout;
        for j in 0..lay.n_modes {
            self.b.matvec(&u[lay.u_mode(j)], &mut y[lay.p_mode(j)]);
        }
    }

    fn apply_bt_add(&self, p: &[f64], y: &mut [f64]) {
        let lay = self.layout;
        for j in 0..lay.n_modes {
            self.bt.matvec_add(1.0, &p[lay.p_mode(j)], &mut y[lay.u_mode(j)]);
        }
    }
}

impl LinearOperator for SgfeOperator {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_c(x, y);
    }
}

/// The velocity block `sum_q G_q (x) A_q` as an operator.
pub struct VelocityBlock<'a>(pub &'a SgfeOperator);

impl LinearOperator for VelocityBlock<'_> {
    fn dim(&self) -> usize {
        self.0.layout.u_len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_a(x, y);
    }
}

/// Mean and variance fields at the P1 vertices.
#[derive(Debug, Clone, Default)]
pub struct MomentFields {
    pub points: Vec<crate::mesh::Point>,
    pub mean_u: [Vec<f64>; 2],
    pub var_u: [Vec<f64>; 2],
    pub mean_p: Vec<f64>,
    pub var_p: Vec<f64>,
}

impl MomentFields {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x1", "x2", "mean_u1", "mean_u2", "var_u1", "var_u2", "mean_p", "var_p"])?;
        for (i, p) in self.points.iter().enumerate() {
            let vals = [
                p[0],
                p[1],
                self.mean_u[0][i],
                self.mean_u[1][i],
                self.var_u[0][i],
                self.var_u[1][i],
                self.mean_p[i],
                self.var_p[i],
            ];
            w.write_record(vals.iter().map(|v| format!("{v:.12e}")))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub iterations: usize,
    /// Euclidean relative residual `||b - C x|| / ||b||`; entry `i` is after
    /// iteration `i` (entry 0 is the initial guess).
    pub rel_residuals: Vec<f64>,
    pub converged: bool,
    pub wall_time: f64,
    /// Solver-specific scalars such as the scaling `a`.
    pub extra: BTreeMap<String, f64>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.rel_residuals.last().copied().unwrap_or(0.0)
    }

    pub fn write_history_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iter", "rel_resid"])?;
        for (i, r) in self.rel_residuals.iter().enumerate() {
            w.write_record([i.to_string(), format!("{r:.12e}")])?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
