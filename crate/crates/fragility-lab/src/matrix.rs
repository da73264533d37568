//! Dense row-major matrices and the QR factorization.
//!
//! The matrices here are small (tens to a few hundred rows), so the
//! implementation favours clarity and exact reproducibility over BLAS-level
//! throughput.  Loops are ordered so the inner dimension walks contiguous
//! memory, which is plenty fast at these sizes.
//!
//! [`qr_decompose`] uses Householder reflections and then flips signs so
//! every diagonal entry of `R` is nonnegative.  That convention makes the
//! factorization unique for full-rank input, which matters when comparing
//! the distribution of `R` entries against closed-form laws.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        (0..m.rows).map(|i| m.row(i).to_vec()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = String;

    fn try_from(rows: Vec<Vec<f64>>) -> std::result::Result<Self, String> {
        if rows.is_empty() {
            return Err("matrix needs at least one row".into());
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err("matrix needs at least one column".into());
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err("ragged rows in matrix".into());
        }
        let nrows = rows.len();
        Ok(DenseMatrix {
            rows: nrows,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        DenseMatrix::try_from(rows).map_err(Error::InvalidData)
    }

    /// Build a matrix whose `i`-th column is `cols[i]`.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        if cols.is_empty() || cols[0].is_empty() {
            return Err(Error::InvalidData("matrix needs at least one column".into()));
        }
        let n = cols[0].len();
        if cols.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidData("ragged columns in matrix".into()));
        }
        Ok(DenseMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row-major view of all entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        assert_eq!(col.len(), self.rows);
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    /// Scale column `j` by `s` in place.
    pub fn scale_column(&mut self, j: usize, s: f64) {
        for i in 0..self.rows {
            self[(i, j)] *= s;
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let arow = self.row(i);
            for (l, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let brow = other.row(l);
                let orow = out.row_mut(i);
                for j in 0..brow.len() {
                    orow[j] += a * brow[j];
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T`.
    pub fn matmul_nt(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "matmul_nt: {}x{} times ({}x{})^T",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out[(i, j)] = dot(self.row(i), other.row(j));
            }
        }
        Ok(out)
    }

    /// `self^T * other`.
    pub fn matmul_tn(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::Dimension(format!(
                "matmul_tn: ({}x{})^T times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for l in 0..self.rows {
            let arow = self.row(l);
            for (i, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let brow = other.row(l);
                let orow = out.row_mut(i);
                for j in 0..brow.len() {
                    orow[j] += a * brow[j];
                }
            }
        }
        Ok(out)
    }

    /// `self * x` for a vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.cols != x.len() {
            return Err(Error::Dimension(format!(
                "matvec: {}x{} times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `self^T * x` for a vector `x`.
    pub fn matvec_t(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.rows != x.len() {
            return Err(Error::Dimension(format!(
                "matvec_t: ({}x{})^T times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (l, &xv) in x.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(l)) {
                *o += xv * a;
            }
        }
        Ok(out)
    }

    /// Inverse of a square matrix via its QR factorization.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "inverse of non-square {}x{}",
                self.rows, self.cols
            )));
        }
        let qr = qr_decompose(self)?;
        let rinv = invert_upper_triangular(&qr.r)?;
        rinv.matmul(&qr.q.transpose())
    }

    /// Cheap condition proxy: `||A||_F * ||A^-1||_F`.
    ///
    /// This upper-bounds the 2-norm condition number within a factor of the
    /// dimension, which is all the generators need for their sanity gates.
    pub fn condition_estimate(&self) -> Result<f64> {
        Ok(self.frobenius_norm() * self.inverse()?.frobenius_norm())
    }

    /// Comma-separated rows, one line per row, shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Orthogonal projection of `v` onto the span of `dirs`.
///
/// Gram-Schmidt with a relative tolerance: directions that are (nearly)
/// linear combinations of earlier ones are dropped, so a collinear pair
/// degrades gracefully to a 1-D projection.
pub fn project_onto_span(v: &[f64], dirs: &[&[f64]]) -> Vec<f64> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for dir in dirs {
        let mut w = dir.to_vec();
        for u in &basis {
            let c = dot(&w, u);
            for (wi, ui) in w.iter_mut().zip(u) {
                *wi -= c * ui;
            }
        }
        let wn = norm(&w);
        if wn > 1e-10 * norm(dir).max(1e-300) {
            basis.push(scale(&w, 1.0 / wn));
        }
    }
    let mut out = vec![0.0; v.len()];
    for u in &basis {
        let c = dot(v, u);
        for (o, ui) in out.iter_mut().zip(u) {
            *o += c * ui;
        }
    }
    out
}

/// Thin QR factorization with nonnegative diagonal.
#[derive(Debug, Clone)]
pub struct QrFactors {
    /// Orthonormal columns, `n x k`.
    pub q: DenseMatrix,
    /// Upper triangular with `r[j][j] >= 0`, `k x k`.
    pub r: DenseMatrix,
}

/// Householder QR of an `n x k` matrix with `n >= k`.
///
/// Returns the thin factors `Q` (`n x k`) and `R` (`k x k`).  A column whose
/// remaining mass after elimination falls below `1e-12 * ||M||_F` makes the
/// input rank deficient to working precision and is reported as
/// [`Error::Singular`] naming that column.
pub fn qr_decompose(m: &DenseMatrix) -> Result<QrFactors> {
    let (n, k) = (m.rows(), m.cols());
    if n < k {
        return Err(Error::Dimension(format!(
            "thin qr needs rows >= cols, got {n}x{k}"
        )));
    }
    let tol = 1e-12 * m.frobenius_norm();

    let mut w = m.clone();
    // Reflector j is stored as (v, beta) with v supported on rows j..n.
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k);

    for j in 0..k {
        let mut v: Vec<f64> = (j..n).map(|i| w[(i, j)]).collect();
        let x_norm = norm(&v);
        if x_norm <= tol {
            return Err(Error::Singular { column: j });
        }
        let alpha = if v[0] >= 0.0 { -x_norm } else { x_norm };
        v[0] -= alpha;
        let vtv = dot(&v, &v);
        let beta = if vtv > 0.0 { 2.0 / vtv } else { 0.0 };

        // Apply I - beta v v^T to the trailing block of w.
        for c in j..k {
            let mut s = 0.0;
            for (off, vi) in v.iter().enumerate() {
                s += vi * w[(j + off, c)];
            }
            let s = beta * s;
            for (off, vi) in v.iter().enumerate() {
                w[(j + off, c)] -= s * vi;
            }
        }
        w[(j, j)] = alpha;
        reflectors.push((v, beta));
    }

    let mut r = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            r[(i, j)] = w[(i, j)];
        }
    }

    // Accumulate the thin Q by applying the reflectors, last first, to the
    // leading k columns of the identity.
    let mut q = DenseMatrix::from_fn(n, k, |i, j| if i == j { 1.0 } else { 0.0 });
    for (j, (v, beta)) in reflectors.iter().enumerate().rev() {
        for c in 0..k {
            let mut s = 0.0;
            for (off, vi) in v.iter().enumerate() {
                s += vi * q[(j + off, c)];
            }
            let s = beta * s;
            for (off, vi) in v.iter().enumerate() {
                q[(j + off, c)] -= s * vi;
            }
        }
    }

    // Fix signs so the diagonal of R is nonnegative.
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for c in j..k {
                r[(j, c)] = -r[(j, c)];
            }
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }

    Ok(QrFactors { q, r })
}

/// Inverse of an upper-triangular matrix by back substitution.
pub fn invert_upper_triangular(r: &DenseMatrix) -> Result<DenseMatrix> {
    let k = r.rows();
    if r.cols() != k {
        return Err(Error::Dimension(format!(
            "triangular inverse of non-square {}x{}",
            k,
            r.cols()
        )));
    }
    let tol = 1e-14 * (1.0 + r.max_abs());
    let mut inv = DenseMatrix::zeros(k, k);
    for c in 0..k {
        // Solve R x = e_c.
        for i in (0..=c).rev() {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for j in i + 1..=c {
                s -= r[(i, j)] * inv[(j, c)];
            }
            let d = r[(i, i)];
            if d.abs() <= tol {
                return Err(Error::Singular { column: i });
            }
            inv[(i, c)] = s / d;
        }
    }
    Ok(inv)
}

/// Solve `R x = b` for upper-triangular `R`.
pub fn solve_upper_triangular(r: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let k = r.rows();
    if r.cols() != k || b.len() != k {
        return Err(Error::Dimension("triangular solve shape".into()));
    }
    let tol = 1e-14 * (1.0 + r.max_abs());
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = b[i];
        for j in i + 1..k {
            s -= r[(i, j)] * x[j];
        }
        if r[(i, i)].abs() <= tol {
            return Err(Error::Singular { column: i });
        }
        x[i] = s / r[(i, i)];
    }
    Ok(x)
}
