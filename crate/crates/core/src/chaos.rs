//! Multivariate orthonormal Hermite chaos and stochastic Galerkin matrices.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Largest chaos basis we are willing to build.
pub const MAX_BASIS: usize = 250_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(m: usize) -> Self {
        Self(vec![0; m])
    }

    pub fn unit(m: usize, dim: usize, degree: u32) -> Self {
        let mut d = vec![0; m];
        d[dim] = degree;
        Self(d)
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(" "))
    }
}

/// Complete total-degree Hermite chaos basis in graded lexicographic order.
#[derive(Debug, Clone)]
pub struct SgBasis {
    pub m: usize,
    pub k: u32,
    pub indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

pub fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k.min(n));
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

pub fn build_basis(m: usize, k: u32) -> Result<SgBasis> {
    if m == 0 {
        return Err(Error::Input("chaos basis needs at least one dimension".into()));
    }
    let size = binomial((m as u64) + k as u64, k as u64)
        .filter(|&s| s as usize <= MAX_BASIS)
        .ok_or(Error::Resource {
            what: "chaos basis size",
            needed: usize::MAX,
            cap: MAX_BASIS,
        })? as usize;

    let mut indices = Vec::with_capacity(size);
    for grade in 0..=k {
        // Lexicographically descending in the leading entries: (g,0,..),
        // (g-1,1,..), ... matches the usual graded-lex listing.
        let mut current = vec![0u32; m];
        compositions(grade, 0, &mut current, &mut indices);
    }
    debug_assert_eq!(indices.len(), size);
    let lookup = indices
        .iter()
        .enumerate()
        .map(|(i, mi)| (mi.clone(), i))
        .collect();
    Ok(SgBasis {
        m,
        k,
        indices,
        lookup,
    })
}

fn compositions(rest: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let m = current.len();
    if pos == m - 1 {
        current[pos] = rest;
        out.push(MultiIndex(current.clone()));
        current[pos] = 0;
        return;
    }
    for d in (0..=rest).rev() {
        current[pos] = d;
        compositions(rest - d, pos + 1, current, out);
    }
    current[pos] = 0;
}

impl SgBasis {
    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn index_of(&self, mi: &MultiIndex) -> Option<usize> {
        self.lookup.get(mi).copied()
    }

    pub fn multi_index(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    /// Evaluates basis function `i` at the parameter vector `y`.
    pub fn eval(&self, i: usize, y: &[f64]) -> f64 {
        self.indices[i]
            .0
            .iter()
            .zip(y)
            .map(|(&d, &yy)| hermite_eval(d, yy))
            .product()
    }
}

/// Orthonormal probabilists' Hermite polynomial `He_n(y) / sqrt(n!)`.
pub fn hermite_eval(n: u32, y: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for j in 0..n {
        let j = j as f64;
        let next = (y * cur - j.sqrt() * prev) / (j + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

pub fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn factorial(n: u32) -> f64 {
    (2..=n).map(f64::from).product()
}

/// `E[h_i h_j h_q]` for orthonormal Hermite polynomials under N(0,1).
pub fn triple_product(i: u32, j: u32, q: u32) -> f64 {
    let sum = i + j + q;
    if sum % 2 == 1 {
        return 0.0;
    }
    let s = sum / 2;
    if i > s || j > s || q > s {
        return 0.0;
    }
    if i.max(j).max(q) <= 20 {
        (factorial(i) * factorial(j) * factorial(q)).sqrt()
            / (factorial(s - i) * factorial(s - j) * factorial(s - q))
    } else {
        (0.5 * (ln_factorial(i) + ln_factorial(j) + ln_factorial(q))
            - ln_factorial(s - i)
            - ln_factorial(s - j)
            - ln_factorial(s - q))
            .exp()
    }
}

pub fn multi_triple_product(i: &MultiIndex, j: &MultiIndex, q: &MultiIndex) -> f64 {
    i.0.iter()
        .zip(&j.0)
        .zip(&q.0)
        .map(|((&a, &b), &c)| triple_product(a, b, c))
        .product()
}

/// Inclusion bound `exp(M (k+1)/2 + sum_m q_m / 2)` on the spectrum of `G_q`.
pub fn g_bound(q: &MultiIndex, k: u32) -> f64 {
    let m = q.len() as f64;
    (m * (k as f64 + 1.0) / 2.0 + 0.5 * q.total() as f64).exp()
}

#[derive(Debug, Clone)]
pub struct GMatrix {
    pub q: MultiIndex,
    pub matrix: SparseMatrix,
    pub bound: f64,
}

/// `(G_q)_ij = E[psi_i psi_j psi_q]` over the solution basis.
pub fn assemble_g(q: &MultiIndex, basis: &SgBasis) -> Result<GMatrix> {
    if q.len() != basis.m {
        return Err(Error::Input(format!(
            "multi-index has {} components, basis has {}",
            q.len(),
            basis.m
        )));
    }
    let n = basis.size();
    let mut trip = Vec::new();
    for i in 0..n {
        for j in i..n {
            let v = multi_triple_product(&basis.indices[i], &basis.indices[j], q);
            if v != 0.0 {
                trip.push((i, j, v));
                if i != j {
                    trip.push((j, i, v));
                }
            }
        }
    }
    Ok(GMatrix {
        q: q.clone(),
        matrix: SparseMatrix::from_triplets(n, n, &trip),
        bound: g_bound(q, basis.k),
    })
}

/// All `G_q` for `q` in `basis_nu`, built by enumerating for every pair
/// `(i, j)` only the `q` that pass the parity and triangle conditions.
pub fn assemble_all_g(basis: &SgBasis, basis_nu: &SgBasis) -> Result<Vec<GMatrix>> {
    if basis.m != basis_nu.m {
        return Err(Error::Input("chaos bases differ in dimension".into()));
    }
    let n = basis.size();
    let mut trips: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); basis_nu.size()];
    let mut q = vec![0u32; basis.m];
    for i in 0..n {
        for j in i..n {
            let a = &basis.indices[i].0;
            let b = &basis.indices[j].0;
            enumerate_q(a, b, 0, &mut q, 1.0, &mut |q, v| {
                let qi = basis_nu
                    .index_of(&MultiIndex(q.to_vec()))
                    .expect("q within the doubled-degree basis");
                trips[qi].push((i, j, v));
                if i != j {
                    trips[qi].push((j, i, v));
                }
            });
        }
    }
    Ok(trips
        .into_iter()
        .enumerate()
        .map(|(qi, t)| GMatrix {
            q: basis_nu.indices[qi].clone(),
            matrix: SparseMatrix::from_triplets(n, n, &t),
            bound: g_bound(&basis_nu.indices[qi], basis.k),
        })
        .collect())
}

fn enumerate_q(
    a: &[u32],
    b: &[u32],
    pos: usize,
    q: &mut Vec<u32>,
    acc: f64,
    emit: &mut impl FnMut(&[u32], f64),
) {
    if pos == a.len() {
        emit(q, acc);
        return;
    }
    let lo = a[pos].abs_diff(b[pos]);
    let hi = a[pos] + b[pos];
    let mut d = lo;
    while d <= hi {
        q[pos] = d;
        enumerate_q(a, b, pos + 1, q, acc * triple_product(a[pos], b[pos], d), emit);
        d += 2;
    }
    q[pos] = 0;
}

/// Mean and variance of a chaos-expanded scalar from its coefficients.
pub fn moments(coeffs: &[f64]) -> (f64, f64) {
    let mean = coeffs.first().copied().unwrap_or(0.0);
    let var = coeffs.iter().skip(1).map(|c| c * c).sum();
    (mean, var)
}

/// Write the index set as CSV: `index,total_degree,multi_index`.
pub fn write_index_csv(basis: &SgBasis, path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "total_degree", "multi_index"])?;
    for (i, mi) in basis.indices.iter().enumerate() {
        w.write_record([i.to_string(), mi.total().to_string(), mi.to_string()])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write `q, multi_index, g_q` for a family of SG matrices.
pub fn write_bound_csv(gs: &[GMatrix], path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["q", "multi_index", "g_q", "nnz"])?;
    for (i, g) in gs.iter().enumerate() {
        w.write_record([
            i.to_string(),
            g.q.to_string(),
            format!("{:.12e}", g.bound),
            g.matrix.nnz().to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Shared handle used by the operator.
pub type SharedBasis = Arc<SgBasis>;
