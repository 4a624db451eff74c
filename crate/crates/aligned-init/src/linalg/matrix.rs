//! Dense row-major matrices with the handful of operations the samplers
//! and the training stack need. Kernels keep a fixed summation order so
//! results are reproducible run to run.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinAlgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {left_rows}x{left_cols} against {right_rows}x{right_cols}")]
    DimMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("data length {len} does not fill a {rows}x{cols} matrix")]
    BadLength { rows: usize, cols: usize, len: usize },
    #[error("thin QR needs rows >= cols, got {rows}x{cols}")]
    WideMatrix { rows: usize, cols: usize },
    #[error("rank-deficient factorization: pivot {index} has magnitude {magnitude:e}")]
    RankDeficient { index: usize, magnitude: f64 },
    #[error("matrix at index {index} is not positive semidefinite (pivot {value:e})")]
    NotPositiveSemidefinite { index: usize, value: f64 },
    #[error("dimension must be at least {min}, got {got}")]
    TooSmall { min: usize, got: usize },
}

/// Row-major dense matrix of f64.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinAlgError> {
        if data.len() != rows * cols {
            return Err(LinAlgError::BadLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Rows stacked as slices; fails if the rows are ragged or empty.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinAlgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinAlgError::BadLength {
                    rows: r,
                    cols: c,
                    len: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self, LinAlgError> {
        if self.cols != other.rows {
            return Err(self.mismatch(other));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (l, &a_il) in a_row.iter().enumerate() {
                axpy(a_il, other.row(l), out_row);
            }
        }
        Ok(out)
    }

    /// `self * other^T`; both operands are traversed row-contiguously.
    pub fn matmul_nt(&self, other: &Self) -> Result<Self, LinAlgError> {
        if self.cols != other.cols {
            return Err(self.mismatch(other));
        }
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for j in 0..other.rows {
                out_row[j] = dot(a_row, other.row(j));
            }
        }
        Ok(out)
    }

    /// `self^T * other`, accumulated as a sum of row outer products.
    pub fn matmul_tn(&self, other: &Self) -> Result<Self, LinAlgError> {
        if self.rows != other.rows {
            return Err(self.mismatch(other));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for l in 0..self.rows {
            let a_row = self.row(l);
            let b_row = other.row(l);
            for (i, &a_li) in a_row.iter().enumerate() {
                axpy(a_li, b_row, out.row_mut(i));
            }
        }
        Ok(out)
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinAlgError> {
        if x.len() != self.cols {
            return Err(LinAlgError::DimMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: x.len(),
                right_cols: 1,
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `self^T * x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinAlgError> {
        if x.len() != self.rows {
            return Err(LinAlgError::DimMismatch {
                left_rows: self.cols,
                left_cols: self.rows,
                right_rows: x.len(),
                right_cols: 1,
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut out);
        }
        Ok(out)
    }

    pub fn add_scalar(&mut self, c: f64) {
        for v in &mut self.data {
            *v += c;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest entrywise difference; the shapes must match.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, LinAlgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(self.mismatch(other));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }

    /// Sum of every entry (the objective `1^T W 1` when applied to a weight matrix).
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    fn mismatch(&self, other: &Self) -> LinAlgError {
        LinAlgError::DimMismatch {
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: other.rows,
            right_cols: other.cols,
        }
    }
}

/// Dot product with four independent accumulators. The fixed lane layout
/// keeps the summation order deterministic while still vectorizing.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let split = a.len() - a.len() % 4;
    let (a4, a_tail) = a.split_at(split);
    let (b4, b_tail) = b.split_at(split);
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for (xa, xb) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        s0 += xa[0] * xb[0];
        s1 += xa[1] * xb[1];
        s2 += xa[2] * xb[2];
        s3 += xa[3] * xb[3];
    }
    let mut tail = 0.0;
    for (xa, xb) in a_tail.iter().zip(b_tail) {
        tail += xa * xb;
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
