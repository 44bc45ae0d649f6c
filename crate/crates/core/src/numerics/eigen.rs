//! Dense symmetric eigensolver (Householder tridiagonalisation + implicit QL).
//!
//! Used as the exact oracle for spectral errors and condition numbers.

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};
use crate::tolerances::SYMMETRY;

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue magnitude (the spectral norm of a symmetric matrix).
    pub fn max_abs(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }
}

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    a.check_finite("symmetric input")?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "symmetric matrix",
            expected: a.rows(),
            actual: a.cols(),
        });
    }
    let asym = a.asymmetry();
    let scale = a.max_abs().max(1.0);
    if asym > SYMMETRY * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<SymmetricEigen> {
    decompose(a, true)
}

/// Eigenvalues only (ascending); skips the eigenvector accumulation work.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    decompose(a, false).map(|e| e.values)
}

fn decompose(a: &DenseMatrix, want_vectors: bool) -> Result<SymmetricEigen> {
    check_symmetric(a)?;
    let n = a.rows();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: DenseMatrix::zeros(0, 0),
        });
    }
    // symmetrise to remove round-off asymmetry
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = 0.5 * (a.get(i, j) + a.get(j, i));
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e, want_vectors);
    tql2(&mut v, &mut d, &mut e, want_vectors)?;

    let mut vectors = DenseMatrix::zeros(if want_vectors { n } else { 0 }, if want_vectors { n } else { 0 });
    if want_vectors {
        for (i, row) in v.iter().enumerate() {
            vectors.row_mut(i).copy_from_slice(row);
        }
    }
    Ok(SymmetricEigen { values: d, vectors })
}

// Householder reduction to tridiagonal form (after the EISPACK/JAMA tred2 routine).
fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64], want_vectors: bool) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1]);
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        let last = v[i][i];
        v[n - 1][i] = last;
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 && want_vectors {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

// Implicit QL iterations on the tridiagonal matrix (after the EISPACK/JAMA tql2 routine).
fn tql2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64], want_vectors: bool) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 200 {
                    return Err(Error::EigenNoConvergence { dim: n });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        for row in v.iter_mut() {
                            let h2 = row[i + 1];
                            row[i + 1] = s * row[i] + c * h2;
                            row[i] = c * row[i] - s * h2;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // sort ascending
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            if want_vectors {
                for row in v.iter_mut() {
                    row.swap(i, k);
                }
            }
        }
    }
    Ok(())
}
