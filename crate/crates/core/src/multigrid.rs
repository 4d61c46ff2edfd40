//! Geometric multigrid V-cycle for the constant-coefficient P2 Laplacian
//! on the nested uniform meshes.
//!
//! Pre-smoothing is forward Gauss-Seidel, post-smoothing is backward
//! Gauss-Seidel and the coarsest level is solved exactly, so the V-cycle is
//! a symmetric positive definite operator.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::fe::{assemble_scalar_laplacian, build_spaces, p2_values, ElementGeometry, TaylorHoodSpace};
use crate::linalg::LinearOperator;
use crate::mesh::{TriMesh, LEVEL0_CELLS};
use crate::sparse::SparseMatrix;

/// Largest coarse problem factored densely.
pub const MAX_COARSE_DOFS: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgConfig {
    /// Gauss-Seidel sweeps before and after the coarse correction.
    pub smooth_sweeps: usize,
    /// Cells per side of the coarsest grid.
    pub coarse_cells: usize,
    /// Cap on the number of grids (including the finest); `None` descends
    /// to `coarse_cells`.
    pub max_levels: Option<usize>,
}

impl Default for MgConfig {
    fn default() -> Self {
        Self {
            smooth_sweeps: 2,
            coarse_cells: 5,
            max_levels: None,
        }
    }
}

pub struct MgLevel {
    pub space: TaylorHoodSpace,
    /// Constant-coefficient Laplacian on the free scalar nodes.
    pub a: SparseMatrix,
    diag: Vec<f64>,
    /// Prolongation from the next coarser level's free nodes.
    pub prolong: Option<SparseMatrix>,
    restrict: Option<SparseMatrix>,
}

pub struct MgHierarchy {
    /// Coarsest first.
    pub levels: Vec<MgLevel>,
    pub config: MgConfig,
    coarse: Cholesky<f64, Dyn>,
}

fn free_laplacian(space: &TaylorHoodSpace) -> Result<SparseMatrix> {
    let full = assemble_scalar_laplacian(space, |_| 1.0)?;
    Ok(full.submatrix(&space.free_nodes, &space.free_nodes))
}

/// Interpolation of coarse P2 functions (free nodes) onto fine free nodes.
/// Exact because the spaces are nested.
pub fn p2_prolongation(coarse: &TaylorHoodSpace, fine: &TaylorHoodSpace) -> SparseMatrix {
    let mut coarse_free = vec![usize::MAX; coarse.n_u];
    for (k, &i) in coarse.free_nodes.iter().enumerate() {
        coarse_free[i] = k;
    }
    let mesh = &coarse.mesh;
    let mut trip = Vec::new();
    for (row, &node) in fine.free_nodes.iter().enumerate() {
        let p = fine.node_coords[node];
        let t = mesh.locate(p);
        let geo = ElementGeometry::new(mesh, t);
        let [a, _, _] = geo.vertices;
        let dx = [p[0] - a[0], p[1] - a[1]];
        let l1 = geo.grad_bary[1][0] * dx[0] + geo.grad_bary[1][1] * dx[1];
        let l2 = geo.grad_bary[2][0] * dx[0] + geo.grad_bary[2][1] * dx[1];
        let vals = p2_values([1.0 - l1 - l2, l1, l2]);
        for (v, &dof) in vals.iter().zip(&coarse.element_dofs[t]) {
            let col = coarse_free[dof];
            if v.abs() > 1e-13 && col != usize::MAX {
                trip.push((row, col, *v));
            }
        }
    }
    SparseMatrix::from_triplets(fine.free_nodes.len(), coarse.free_nodes.len(), &trip)
}

impl MgHierarchy {
    /// Hierarchy whose finest grid is the level-`level` mesh.
    pub fn new(level: usize, config: MgConfig) -> Result<Self> {
        let fine_cells = LEVEL0_CELLS << level;
        Self::with_cells(fine_cells, level as i32, config)
    }

    pub fn with_cells(fine_cells: usize, fine_level: i32, config: MgConfig) -> Result<Self> {
        if config.coarse_cells == 0 || fine_cells % config.coarse_cells != 0 {
            return Err(Error::Config(format!(
                "coarse grid with {} cells does not nest in {} cells",
                config.coarse_cells, fine_cells
            )));
        }
        let ratio = fine_cells / config.coarse_cells;
        if !ratio.is_power_of_two() {
            return Err(Error::Config(format!(
                "{fine_cells} cells is not a dyadic refinement of {}",
                config.coarse_cells
            )));
        }
        let mut depth = ratio.trailing_zeros() as usize + 1;
        if let Some(cap) = config.max_levels {
            depth = depth.min(cap.max(1));
        }
        let mut cells: Vec<usize> = (0..depth).map(|d| fine_cells >> (depth - 1 - d)).collect();
        cells.dedup();

        let mut levels: Vec<MgLevel> = Vec::with_capacity(cells.len());
        for (d, &c) in cells.iter().enumerate() {
            let lvl = fine_level - (cells.len() - 1 - d) as i32;
            let space = build_spaces(Arc::new(TriMesh::uniform(c, lvl)));
            let a = free_laplacian(&space)?;
            let diag = a.diagonal();
            let prolong = levels.last().map(|coarse| p2_prolongation(&coarse.space, &space));
            let restrict = prolong.as_ref().map(SparseMatrix::transpose);
            levels.push(MgLevel {
                space,
                a,
                diag,
                prolong,
                restrict,
            });
        }

        let a0 = &levels[0].a;
        if a0.nrows() > MAX_COARSE_DOFS {
            return Err(Error::Resource {
                what: "coarse multigrid dofs",
                needed: a0.nrows(),
                cap: MAX_COARSE_DOFS,
            });
        }
        let coarse = Cholesky::new(a0.to_dense())
            .ok_or_else(|| Error::Config("coarse Laplacian is not positive definite".into()))?;
        Ok(Self {
            levels,
            config,
            coarse,
        })
    }

    pub fn finest(&self) -> &MgLevel {
        self.levels.last().expect("at least one level")
    }

    pub fn n_free(&self) -> usize {
        self.finest().a.nrows()
    }

    /// One V-cycle `z = A_mg^{-1} r` on the finest free scalar nodes.
    pub fn vcycle(&self, r: &[f64], z: &mut [f64]) {
        self.cycle(self.levels.len() - 1, r, z);
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        if l == 0 {
            let sol = self.coarse.solve(&DMatrix::from_column_slice(b.len(), 1, b));
            x.copy_from_slice(sol.as_slice());
            return;
        }
        let lev = &self.levels[l];
        x.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..self.config.smooth_sweeps {
            gauss_seidel_forward(&lev.a, &lev.diag, b, x);
        }
        let mut res = b.to_vec();
        lev.a.matvec_add(-1.0, x, &mut res);
        let restrict = lev.restrict.as_ref().expect("restriction on non-coarse level");
        let prolong = lev.prolong.as_ref().expect("prolongation on non-coarse level");
        let rc = restrict.mul_vec(&res);
        let mut ec = vec![0.0; rc.len()];
        self.cycle(l - 1, &rc, &mut ec);
        prolong.matvec_add(1.0, &ec, x);
        for _ in 0..self.config.smooth_sweeps {
            gauss_seidel_backward(&lev.a, &lev.diag, b, x);
        }
    }
}

impl LinearOperator for MgHierarchy {
    fn dim(&self) -> usize {
        self.n_free()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.vcycle(x, y);
    }
}

pub fn gauss_seidel_forward(a: &SparseMatrix, diag: &[f64], b: &[f64], x: &mut [f64]) {
    let p = &a.pattern;
    for i in 0..p.nrows {
        let mut s = b[i];
        for k in p.indptr[i]..p.indptr[i + 1] {
            let j = p.indices[k];
            if j != i {
                s -= a.values[k] * x[j];
            }
        }
        x[i] = s / diag[i];
    }
}

pub fn gauss_seidel_backward(a: &SparseMatrix, diag: &[f64], b: &[f64], x: &mut [f64]) {
    let p = &a.pattern;
    for i in (0..p.nrows).rev() {
        let mut s = b[i];
        for k in p.indptr[i]..p.indptr[i + 1] {
            let j = p.indices[k];
            if j != i {
                s -= a.values[k] * x[j];
            }
        }
        x[i] = s / diag[i];
    }
}
