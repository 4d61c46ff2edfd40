//! Taylor-Hood P2/P1 spaces and assembly of the deterministic FE matrices.
//!
//! Scalar P2 nodes are numbered vertices first, then edge midpoints. A
//! velocity vector of length `2 n_u` stores the `x_1` component followed by
//! the `x_2` component. Pressure dofs are the mesh vertices.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Point, TriMesh};
use crate::quadrature::TRIANGLE_RULE;
use crate::sparse::{CsrPattern, SparseMatrix};

pub const NQP: usize = TRIANGLE_RULE.len();

#[derive(Debug)]
pub struct TaylorHoodSpace {
    pub mesh: Arc<TriMesh>,
    /// Scalar P2 node count (per velocity component).
    pub n_u: usize,
    /// P1 node count.
    pub n_p: usize,
    pub node_coords: Vec<Point>,
    /// Local P2 dofs: three vertices then the midpoints of the local edges
    /// `(0,1)`, `(1,2)`, `(2,0)`.
    pub element_dofs: Vec<[usize; 6]>,
    /// Scalar nodes on the boundary, ascending.
    pub boundary_nodes: Vec<usize>,
    /// Scalar nodes off the boundary, ascending.
    pub free_nodes: Vec<usize>,
    /// Vector velocity dofs (both components) on the boundary.
    pub dirichlet_dofs: Vec<usize>,
    /// Vector velocity dofs (both components) on the lid `x_2 = 0.5`.
    pub lid_dofs: Vec<usize>,
}

pub fn build_spaces(mesh: Arc<TriMesh>) -> TaylorHoodSpace {
    let nv = mesh.vertices.len();
    let n_u = nv + mesh.edges.len();
    let mut node_coords = mesh.vertices.clone();
    node_coords.extend(mesh.edges.iter().map(|e| e.midpoint));

    let element_dofs = mesh
        .triangles
        .iter()
        .zip(&mesh.triangle_edges)
        .map(|(t, e)| [t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]])
        .collect();

    let mut is_bnd = vec![false; n_u];
    for &v in &mesh.boundary_vertex_ids {
        is_bnd[v] = true;
    }
    for &e in &mesh.boundary_edge_ids {
        is_bnd[nv + e] = true;
    }
    let boundary_nodes: Vec<usize> = (0..n_u).filter(|&i| is_bnd[i]).collect();
    let free_nodes: Vec<usize> = (0..n_u).filter(|&i| !is_bnd[i]).collect();
    let dirichlet_dofs = boundary_nodes
        .iter()
        .copied()
        .chain(boundary_nodes.iter().map(|&i| n_u + i))
        .collect();
    let lid: Vec<usize> = boundary_nodes
        .iter()
        .copied()
        .filter(|&i| (node_coords[i][1] - 0.5).abs() < 1e-12)
        .collect();
    let lid_dofs = lid.iter().copied().chain(lid.iter().map(|&i| n_u + i)).collect();

    TaylorHoodSpace {
        n_u,
        n_p: nv,
        node_coords,
        element_dofs,
        boundary_nodes,
        free_nodes,
        dirichlet_dofs,
        lid_dofs,
        mesh,
    }
}

/// Affine element data: area and the constant barycentric gradients.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    pub vertices: [Point; 3],
    pub grad_bary: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(mesh: &TriMesh, t: usize) -> Self {
        let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let grad_bary = [
            [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
            [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
            [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
        ];
        Self {
            area: 0.5 * det,
            vertices: [a, b, c],
            grad_bary,
        }
    }

    pub fn point(&self, bary: [f64; 3]) -> Point {
        let [a, b, c] = self.vertices;
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }

    /// Gradients of the six P2 shape functions at a barycentric point.
    pub fn p2_gradients(&self, l: [f64; 3]) -> [[f64; 2]; 6] {
        let g = self.grad_bary;
        let mut out = [[0.0; 2]; 6];
        for i in 0..3 {
            for d in 0..2 {
                out[i][d] = (4.0 * l[i] - 1.0) * g[i][d];
            }
        }
        for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            for d in 0..2 {
                out[3 + k][d] = 4.0 * (l[i] * g[j][d] + l[j] * g[i][d]);
            }
        }
        out
    }
}

/// P2 shape function values at a barycentric point.
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Precomputed per-quadrature-point element stiffness contributions, so a
/// family of weighted Laplacians can be assembled from weight values only.
pub struct LaplacianKernel {
    pub pattern: Arc<CsrPattern>,
    /// Physical coordinates of all quadrature points, element-major.
    pub points: Vec<Point>,
    /// `w_g |T| grad phi_i . grad phi_j`, indexed `[(t * NQP + g) * 36 + 6 i + j]`.
    local: Vec<f64>,
    /// CSR slot of local entry `(i, j)` of element `t`: `[t * 36 + 6 i + j]`.
    slots: Vec<usize>,
}

impl LaplacianKernel {
    pub fn new(space: &TaylorHoodSpace) -> Self {
        let mesh = &space.mesh;
        let ne = mesh.triangles.len();
        let coords: Vec<(usize, usize)> = space
            .element_dofs
            .iter()
            .flat_map(|d| d.iter().flat_map(move |&i| d.iter().map(move |&j| (i, j))))
            .collect();
        let pattern = Arc::new(CsrPattern::from_coords(space.n_u, space.n_u, &coords));

        let mut points = Vec::with_capacity(ne * NQP);
        let mut local = Vec::with_capacity(ne * NQP * 36);
        let mut slots = Vec::with_capacity(ne * 36);
        for t in 0..ne {
            let geo = ElementGeometry::new(mesh, t);
            for (l, w) in TRIANGLE_RULE {
                points.push(geo.point(l));
                let grads = geo.p2_gradients(l);
                for gi in &grads {
                    for gj in &grads {
                        local.push(w * geo.area * (gi[0] * gj[0] + gi[1] * gj[1]));
                    }
                }
            }
            let dofs = &space.element_dofs[t];
            for &i in dofs {
                for &j in dofs {
                    slots.push(pattern.find(i, j).expect("element entry in pattern"));
                }
            }
        }
        Self {
            pattern,
            points,
            local,
            slots,
        }
    }

    pub fn n_elements(&self) -> usize {
        self.slots.len() / 36
    }

    /// Scalar `n_u x n_u` matrix `int w grad phi_i . grad phi_j` for the
    /// weight sampled at [`Self::points`].
    pub fn assemble(&self, weights: &[f64]) -> Result<SparseMatrix> {
        assert_eq!(weights.len(), self.points.len());
        let mut m = SparseMatrix::zeros(Arc::clone(&self.pattern));
        for t in 0..self.n_elements() {
            let mut elem = [0.0; 36];
            for g in 0..NQP {
                let w = weights[t * NQP + g];
                if !w.is_finite() {
                    return Err(Error::Assembly { element: t });
                }
                let base = (t * NQP + g) * 36;
                for (e, l) in elem.iter_mut().zip(&self.local[base..base + 36]) {
                    *e += w * l;
                }
            }
            for (k, e) in elem.iter().enumerate() {
                m.values[self.slots[t * 36 + k]] += e;
            }
        }
        Ok(m)
    }
}

/// Scalar weighted Laplacian on all P2 nodes (no boundary elimination).
pub fn assemble_scalar_laplacian(
    space: &TaylorHoodSpace,
    weight: impl Fn(Point) -> f64,
) -> Result<SparseMatrix> {
    let kernel = LaplacianKernel::new(space);
    let weights: Vec<f64> = kernel.points.iter().map(|&p| weight(p)).collect();
    kernel.assemble(&weights)
}

/// `2 n_u x 2 n_u` block-diagonal vector Laplacian `int w grad u : grad v`.
pub fn assemble_weighted_laplacian(
    space: &TaylorHoodSpace,
    weight: impl Fn(Point) -> f64,
) -> Result<SparseMatrix> {
    let scalar = assemble_scalar_laplacian(space, weight)?;
    Ok(block_diag2(&scalar))
}

pub fn block_diag2(a: &SparseMatrix) -> SparseMatrix {
    let n = a.nrows();
    let t: Vec<_> = a
        .triplets()
        .flat_map(|(r, c, v)| [(r, c, v), (n + r, n + c, v)])
        .collect();
    SparseMatrix::from_triplets(2 * n, 2 * n, &t)
}

/// `n_p x 2 n_u` matrix with entries `-int chi_i div phi_j`.
pub fn assemble_divergence(space: &TaylorHoodSpace) -> SparseMatrix {
    let mesh = &space.mesh;
    let n_u = space.n_u;
    let mut trip = Vec::with_capacity(mesh.triangles.len() * 36);
    for t in 0..mesh.triangles.len() {
        let geo = ElementGeometry::new(mesh, t);
        let pdofs = mesh.triangles[t];
        let vdofs = &space.element_dofs[t];
        let mut local = [[[0.0; 6]; 3]; 2];
        for (l, w) in TRIANGLE_RULE {
            let grads = geo.p2_gradients(l);
            for i in 0..3 {
                for j in 0..6 {
                    for d in 0..2 {
                        local[d][i][j] -= w * geo.area * l[i] * grads[j][d];
                    }
                }
            }
        }
        for d in 0..2 {
            for i in 0..3 {
                for j in 0..6 {
                    trip.push((pdofs[i], d * n_u + vdofs[j], local[d][i][j]));
                }
            }
        }
    }
    SparseMatrix::from_triplets(space.n_p, 2 * n_u, &trip)
}

/// P1 pressure mass matrix and its diagonal (as a matrix).
pub fn assemble_pressure_mass(space: &TaylorHoodSpace) -> (SparseMatrix, SparseMatrix) {
    let mesh = &space.mesh;
    let mut trip = Vec::with_capacity(mesh.triangles.len() * 9);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.signed_area(t);
        for i in 0..3 {
            for j in 0..3 {
                let v = if i == j { area / 6.0 } else { area / 12.0 };
                trip.push((tri[i], tri[j], v));
            }
        }
    }
    let mp = SparseMatrix::from_triplets(space.n_p, space.n_p, &trip);
    let diag: Vec<_> = mp.diagonal().into_iter().enumerate().map(|(i, v)| (i, i, v)).collect();
    let dp = SparseMatrix::from_triplets(space.n_p, space.n_p, &diag);
    (mp, dp)
}

/// Regularized cavity lid profile.
pub fn lid_profile(x1: f64) -> f64 {
    1.0 - 16.0 * x1.powi(4)
}

/// Nodal interpolant of the boundary data, zero in the interior.
pub fn lift_boundary(space: &TaylorHoodSpace) -> Vec<f64> {
    let mut w = vec![0.0; 2 * space.n_u];
    for &d in &space.lid_dofs {
        if d < space.n_u {
            w[d] = lid_profile(space.node_coords[d][0]);
        }
    }
    w
}
