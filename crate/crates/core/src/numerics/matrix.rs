use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        ensure_dim("DenseMatrix::new", rows * cols, data.len())?;
        ensure_finite(&data, "matrix entries")?;
        Ok(Self { rows, cols, data })
    }

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

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Stacks equally long rows. An empty slice yields a `0 x cols` matrix.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            ensure_dim("DenseMatrix::from_rows", cols, r.len())?;
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on zero chunk size
        let cols = self.cols.max(1);
        self.data.chunks_exact(cols).take(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// Appends one row.
    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        ensure_dim("DenseMatrix::push_row", self.cols, row.len())?;
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Keeps the first `rows` rows.
    pub fn truncate_rows(&mut self, rows: usize) {
        if rows < self.rows {
            self.rows = rows;
            self.data.truncate(rows * self.cols);
        }
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        ensure_dim("DenseMatrix::vstack", self.cols, other.cols)?;
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(DenseMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        ensure_dim("DenseMatrix::matmul", self.cols, other.rows)?;
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                axpy(a, other.row(k), out_row);
            }
        }
        Ok(out)
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim("DenseMatrix::matvec", self.cols, x.len())?;
        Ok(self.row_iter().map(|r| dot(r, x)).collect())
    }

    /// `Aᵀ y`.
    pub fn tmatvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        ensure_dim("DenseMatrix::tmatvec", self.rows, y.len())?;
        let mut out = vec![0.0; self.cols];
        for (r, &yi) in self.row_iter().zip(y) {
            if yi != 0.0 {
                axpy(yi, r, &mut out);
            }
        }
        Ok(out)
    }

    /// `A Aᵀ` (rows × rows).
    pub fn row_gram(&self) -> DenseMatrix {
        let n = self.rows;
        let mut g = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.row(i), self.row(j));
                g.data[i * n + j] = v;
                g.data[j * n + i] = v;
            }
        }
        g
    }

    /// `A Bᵀ` for two matrices sharing the column dimension.
    pub fn cross_gram(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        ensure_dim("DenseMatrix::cross_gram", self.cols, other.cols)?;
        let mut g = DenseMatrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                g.data[i * other.rows + j] = dot(self.row(i), other.row(j));
            }
        }
        Ok(g)
    }

    /// `Aᵀ A` (cols × cols).
    pub fn col_gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for r in self.row_iter() {
            add_outer(&mut g, 1.0, r);
        }
        g
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        ensure_dim("DenseMatrix::add", self.rows, other.rows)?;
        ensure_dim("DenseMatrix::add", self.cols, other.cols)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(DenseMatrix { data, ..*self })
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        ensure_dim("DenseMatrix::sub", self.rows, other.rows)?;
        ensure_dim("DenseMatrix::sub", self.cols, other.cols)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(DenseMatrix { data, ..*self })
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            data: self.data.iter().map(|v| v * s).collect(),
            ..*self
        }
    }

    /// Adds `s` to every diagonal entry in place.
    pub fn add_diag(&mut self, s: f64) {
        for i in 0..self.rows.min(self.cols) {
            self.data[i * self.cols + i] += s;
        }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij - A_ji|`; infinite for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { what })
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `y += a x`.
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `g += s · u uᵀ` for square `g`.
pub fn add_outer(g: &mut DenseMatrix, s: f64, u: &[f64]) {
    let n = g.cols;
    for (i, &ui) in u.iter().enumerate() {
        if ui == 0.0 {
            continue;
        }
        let f = s * ui;
        axpy(f, u, &mut g.data[i * n..(i + 1) * n]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn products_agree() {
        let a = DenseMatrix::new(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.5, 4.0]).unwrap();
        let at = a.transpose();
        assert_eq!(a.row_gram(), a.matmul(&at).unwrap());
        assert_eq!(a.col_gram(), at.matmul(&a).unwrap());
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]).unwrap(), vec![6.0, 3.5]);
        assert_eq!(a.tmatvec(&[1.0, 2.0]).unwrap(), vec![-1.0, 3.0, 11.0]);
    }

    #[test]
    fn empty_row_iteration() {
        let m = DenseMatrix::zeros(0, 4);
        assert_eq!(m.row_iter().count(), 0);
        let m = DenseMatrix::zeros(3, 0);
        assert_eq!(m.row_gram().shape(), (3, 3));
    }
}
