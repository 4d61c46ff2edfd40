//! Compressed sparse row storage.
//!
//! Matrices that come out of the same assembly loop share one
//! [`CsrPattern`] behind an `Arc`, so the weighted Laplacian family only
//! stores one value array per chaos coefficient.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrPattern {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
}

impl CsrPattern {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Position of `(row, col)` in the value array.
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.indptr[row];
        let hi = self.indptr[row + 1];
        self.indices[lo..hi]
            .binary_search(&col)
            .ok()
            .map(|k| lo + k)
    }

    /// Builds a pattern from unsorted coordinates (duplicates allowed).
    pub fn from_coords(nrows: usize, ncols: usize, coords: &[(usize, usize)]) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nrows];
        for &(r, c) in coords {
            debug_assert!(r < nrows && c < ncols);
            rows[r].push(c);
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            indices.extend(cols);
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub pattern: Arc<CsrPattern>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    /// Sums duplicate entries.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let coords: Vec<_> = triplets.iter().map(|&(r, c, _)| (r, c)).collect();
        let pattern = Arc::new(CsrPattern::from_coords(nrows, ncols, &coords));
        let mut m = Self::zeros(pattern);
        for &(r, c, v) in triplets {
            let k = m.pattern.find(r, c).expect("entry in pattern");
            m.values[k] += v;
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t)
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.find(row, col).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.pattern.indptr[row];
        let hi = self.pattern.indptr[row + 1];
        self.pattern.indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `y <- A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        csr_matvec(&self.pattern, &self.values, x, y);
    }

    /// `y <- y + alpha A x`
    pub fn matvec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        csr_matvec_add(&self.pattern, &self.values, alpha, x, y);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.matvec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        SparseMatrix::from_triplets(self.ncols(), self.nrows(), &t)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows().min(self.ncols()))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        SparseMatrix {
            pattern: Arc::clone(&self.pattern),
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Entries of `self[rows, cols]`; `rows`/`cols` map new index -> old.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let (pattern, gather) = sub_pattern(&self.pattern, rows, cols);
        let values = gather.iter().map(|&k| self.values[k]).collect();
        SparseMatrix {
            pattern: Arc::new(pattern),
            values,
        }
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry magnitude.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows(), self.ncols());
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Matrix Market coordinate format, general real.
    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io)?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "%%MatrixMarket matrix coordinate real general").map_err(io)?;
        writeln!(w, "{} {} {}", self.nrows(), self.ncols(), self.nnz()).map_err(io)?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Restricts a pattern to the given rows and columns. Returns the new
/// pattern and, for each of its entries, the index into the old values.
pub fn sub_pattern(p: &CsrPattern, rows: &[usize], cols: &[usize]) -> (CsrPattern, Vec<usize>) {
    let mut col_map = vec![usize::MAX; p.ncols];
    for (new, &old) in cols.iter().enumerate() {
        col_map[old] = new;
    }
    let mut indptr = Vec::with_capacity(rows.len() + 1);
    let mut indices = Vec::new();
    let mut gather = Vec::new();
    indptr.push(0);
    for &r in rows {
        let mut row: Vec<(usize, usize)> = (p.indptr[r]..p.indptr[r + 1])
            .filter_map(|k| {
                let c = col_map[p.indices[k]];
                (c != usize::MAX).then_some((c, k))
            })
            .collect();
        row.sort_unstable();
        for (c, k) in row {
            indices.push(c);
            gather.push(k);
        }
        indptr.push(indices.len());
    }
    (
        CsrPattern {
            nrows: rows.len(),
            ncols: cols.len(),
            indptr,
            indices,
        },
        gather,
    )
}

#[inline]
pub fn csr_matvec(p: &CsrPattern, values: &[f64], x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), p.ncols);
    debug_assert_eq!(y.len(), p.nrows);
    for (r, yr) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in p.indptr[r]..p.indptr[r + 1] {
            s += values[k] * x[p.indices[k]];
        }
        *yr = s;
    }
}

#[inline]
pub fn csr_matvec_add(p: &CsrPattern, values: &[f64], alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), p.ncols);
    debug_assert_eq!(y.len(), p.nrows);
    for (r, yr) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in p.indptr[r]..p.indptr[r + 1] {
            s += values[k] * x[p.indices[k]];
        }
        *yr += alpha * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (0, 1, 2.5), (1, 0, -1.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 3.5);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 2.0, 3.0]), vec![7.0, -1.0]);
    }

    #[test]
    fn transpose_and_submatrix() {
        let m = SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 4.0), (0, 2, 1.0), (1, 1, 3.0), (2, 0, 2.0), (2, 2, 5.0)],
        );
        let t = m.transpose();
        assert_eq!(t.get(2, 0), 1.0);
        assert_eq!(t.get(0, 2), 2.0);
        let s = m.submatrix(&[2, 0], &[0, 2]);
        assert_eq!(s.to_dense(), nalgebra::dmatrix![2.0, 5.0; 4.0, 1.0]);
        assert!(m.asymmetry() > 0.0);
        assert_eq!(SparseMatrix::identity(4).asymmetry(), 0.0);
    }

    #[test]
    fn matrix_market_roundtrip_header() {
        let dir = std::env::temp_dir().join("sgstokes_mm_test.mtx");
        let m = SparseMatrix::identity(3);
        m.write_matrix_market(&dir).unwrap();
        let text = std::fs::read_to_string(&dir).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("%%MatrixMarket"));
        assert_eq!(lines.next().unwrap(), "3 3 3");
        assert_eq!(lines.count(), 3);
    }
}
