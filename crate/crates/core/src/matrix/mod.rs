//! Dense real matrices, singular value decomposition and the unitarily
//! invariant norms built on top of it.

mod norms;
mod qr;
mod random;
mod svd;

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{dim, Error, Result};

pub use norms::{best_s_rank_approx, ky_fan_norm, norms, s_largest_abs_sum, Norms};
pub use qr::{householder_qr, orthonormal_complement};
pub use random::{
    gaussian_matrix, random_orthonormal, random_s_rank, random_s_rank_with, SingularValueDist,
};
pub use svd::{svd, SvdFactors, MAX_SWEEPS, RANK_REL_TOL, TOL_ORTH, TOL_RECON};

/// Row-major dense matrix of finite reals.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Rectangular `rows × cols` matrix with `diag` on its main diagonal.
    pub fn from_diag(rows: usize, cols: usize, diag: &[f64]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate().take(rows.min(cols)) {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return dim(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                entries.len()
            ));
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return dim("ragged rows");
        }
        Self::from_row_major(r, c, rows.concat())
    }

    /// Matrix whose columns are the given vectors (all of length `rows`).
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length");
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// `min(rows, cols)`.
    #[inline]
    pub fn min_dim(&self) -> usize {
        self.rows.min(self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    /// First `k` columns.
    pub fn leading_columns(&self, k: usize) -> DenseMatrix {
        self.submatrix(0..self.rows, 0..k)
    }

    pub fn submatrix(
        &self,
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
    ) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rows.len(), cols.len());
        for (oi, i) in rows.enumerate() {
            for (oj, j) in cols.clone().enumerate() {
                out[(oi, oj)] = self[(i, j)];
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimension");
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.entries[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.entries[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · rhs` without materialising the transpose.
    pub fn t_matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, rhs.rows, "t_matmul inner dimension");
        let mut out = DenseMatrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = rhs.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.entries[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ · y`.
    pub fn t_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, y.len(), "t_matvec dimension");
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += yi * a;
            }
        }
        out
    }

    /// Frobenius inner product `⟨self, other⟩ = trace(selfᵀ other)`.
    pub fn inner(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "inner product shapes");
        dot(&self.entries, &other.entries)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.entries)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        self.axpby(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        self.axpby(1.0, other, -1.0)
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &DenseMatrix, b: f64) -> DenseMatrix {
        assert_eq!(self.shape(), other.shape(), "axpby shapes");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// `‖selfᵀ self − I‖_F`, the departure from orthonormal columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.t_matmul(self);
        g.sub(&DenseMatrix::identity(self.cols)).frobenius_norm()
    }

    /// `U · Diag(d) · Vᵀ` for `U` (m×k), `V` (n×k) and `d` of length k.
    pub fn from_factors(u: &DenseMatrix, d: &[f64], v: &DenseMatrix) -> DenseMatrix {
        assert_eq!(u.cols, d.len());
        assert_eq!(v.cols, d.len());
        let mut out = DenseMatrix::zeros(u.rows, v.rows);
        for (k, &dk) in d.iter().enumerate() {
            if dk == 0.0 {
                continue;
            }
            for i in 0..u.rows {
                let a = dk * u[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let row = &mut out.entries[i * v.rows..(i + 1) * v.rows];
                for (j, o) in row.iter_mut().enumerate() {
                    *o += a * v[(j, k)];
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `H x = b` for symmetric positive definite `H` by Cholesky
/// factorization; `None` if a pivot is not positive.
pub fn cholesky_solve(h: &DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = h.rows();
    assert_eq!((h.cols(), b.len()), (n, n));
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let d = h[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if !(d > 0.0) {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let v = h[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = v / ljj;
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        z[i] = (b[i] - (0..i).map(|k| l[(i, k)] * z[k]).sum::<f64>()) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (z[i] - (i + 1..n).map(|k| l[(k, i)] * x[k]).sum::<f64>()) / l[(i, i)];
    }
    Some(x)
}
