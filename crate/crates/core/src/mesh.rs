//! Uniform triangulations of the square `[-0.5, 0.5]^2`.
//!
//! Every square cell is split into two triangles by the diagonal from its
//! lower-left to its upper-right corner. Midpoint refinement of this mesh
//! is again a mesh of the same kind, so the meshes of consecutive levels are
//! nested.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Spacing of the level-0 mesh.
pub const COARSEST_H: f64 = 0.1;
/// Cells per side on level 0.
pub const LEVEL0_CELLS: usize = 10;
/// Upper bound on scalar P2 nodes a mesh may carry.
pub const MAX_NODES: usize = 4_000_000;

#[derive(Debug, Clone)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub midpoint: Point,
}

#[derive(Debug)]
pub struct TriMesh {
    /// Refinement level; `h = 0.1 / 2^level`. Meshes coarser than level 0
    /// (used only as multigrid base grids) carry a negative level.
    pub level: i32,
    pub cells: usize,
    pub h: f64,
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Edge ids of the local edges `(v0,v1)`, `(v1,v2)`, `(v2,v0)`.
    pub triangle_edges: Vec<[usize; 3]>,
    pub boundary_vertex_ids: Vec<usize>,
    pub boundary_edge_ids: Vec<usize>,
    pub parent: Option<Arc<TriMesh>>,
}

/// Mesh of the given level with its full chain of parents down to level 0.
pub fn build_mesh(level: usize) -> Result<Arc<TriMesh>> {
    let cells = LEVEL0_CELLS
        .checked_shl(level as u32)
        .filter(|c| *c <= 1 << 16)
        .ok_or(Error::Resource {
            what: "mesh cells per side",
            needed: usize::MAX,
            cap: 1 << 16,
        })?;
    let nodes = (2 * cells + 1) * (2 * cells + 1);
    if nodes > MAX_NODES {
        return Err(Error::Resource {
            what: "P2 nodes",
            needed: nodes,
            cap: MAX_NODES,
        });
    }
    let parent = if level == 0 {
        None
    } else {
        Some(build_mesh(level - 1)?)
    };
    let mut mesh = TriMesh::uniform(cells, level as i32);
    mesh.parent = parent;
    Ok(Arc::new(mesh))
}

impl TriMesh {
    /// `cells x cells` uniform mesh without parent link.
    pub fn uniform(cells: usize, level: i32) -> TriMesh {
        assert!(cells >= 1);
        let n = cells;
        let h = 1.0 / n as f64;
        let vid = |i: usize, j: usize| j * (n + 1) + i;

        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([-0.5 + i as f64 * h, -0.5 + j as f64 * h]);
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = vid(i, j);
                let v10 = vid(i + 1, j);
                let v01 = vid(i, j + 1);
                let v11 = vid(i + 1, j + 1);
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }

        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let mut te = [0; 3];
            for (k, te_k) in te.iter_mut().enumerate() {
                let a = t[k];
                let b = t[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                *te_k = *edge_ids.entry(key).or_insert_with(|| {
                    let pa = vertices[key.0];
                    let pb = vertices[key.1];
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        midpoint: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
                    });
                    edges.len() - 1
                });
            }
            triangle_edges.push(te);
        }

        let boundary_vertex_ids = (0..vertices.len())
            .filter(|&v| {
                let (i, j) = (v % (n + 1), v / (n + 1));
                i == 0 || j == 0 || i == n || j == n
            })
            .collect();
        let boundary_edge_ids = (0..edges.len())
            .filter(|&e| on_boundary(edges[e].midpoint))
            .collect();

        TriMesh {
            level,
            cells: n,
            h,
            vertices,
            triangles,
            edges,
            triangle_edges,
            boundary_vertex_ids,
            boundary_edge_ids,
            parent: None,
        }
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Index of the triangle containing `p` (ties resolved towards the
    /// lower-left cell and the lower triangle).
    pub fn locate(&self, p: Point) -> usize {
        let n = self.cells;
        let fx = (p[0] + 0.5) / self.h;
        let fy = (p[1] + 0.5) / self.h;
        let i = (fx.floor().max(0.0) as usize).min(n - 1);
        let j = (fy.floor().max(0.0) as usize).min(n - 1);
        let (lx, ly) = (fx - i as f64, fy - j as f64);
        let cell = j * n + i;
        if ly <= lx + 1e-12 {
            2 * cell
        } else {
            2 * cell + 1
        }
    }
}

pub fn on_boundary(p: Point) -> bool {
    const TOL: f64 = 1e-12;
    (p[0].abs() - 0.5).abs() < TOL || (p[1].abs() - 0.5).abs() < TOL
}
