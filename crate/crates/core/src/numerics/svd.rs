//! Thin SVD by one-sided (Hestenes) Jacobi rotations.

use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};
use crate::tolerances::{JACOBI_MAX_SWEEPS, JACOBI_NEGLIGIBLE_ROW, JACOBI_ORTHOGONALITY};

/// Thin SVD `A = U diag(σ) Vᵀ` with `k = min(rows, cols)` singular triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    /// `rows x k`, orthonormal columns.
    pub left_vectors: DenseMatrix,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    /// `cols x k`, orthonormal columns.
    pub right_vectors: DenseMatrix,
}

impl SvdResult {
    /// `U diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, k) = self.left_vectors.shape();
        let n = self.right_vectors.rows();
        let mut out = DenseMatrix::zeros(m, n);
        for i in 0..m {
            for r in 0..k {
                let f = self.left_vectors.get(i, r) * self.singular_values[r];
                if f == 0.0 {
                    continue;
                }
                let row = out.row_mut(i);
                for (j, o) in row.iter_mut().enumerate() {
                    *o += f * self.right_vectors.get(j, r);
                }
            }
        }
        out
    }

    /// Number of singular values above `rel · σ₁`.
    pub fn numerical_rank(&self, rel: f64) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.singular_values.iter().filter(|&&s| s > rel * top).count()
    }
}

/// Singular values and right singular vectors only, for row-short matrices.
///
/// Rows of `basis` are the right singular vectors `vᵢᵀ` (only for nonzero σᵢ; rows for
/// zero singular values are left at zero). Used by the sketch updates, which never need `U`.
#[derive(Debug, Clone)]
pub(crate) struct RightSvd {
    pub singular_values: Vec<f64>,
    pub basis: DenseMatrix,
}

/// Thin SVD of `a`.
///
/// Singular vectors are deterministic up to ties: the first component of each right singular
/// vector with magnitude above 1e-12 is made positive.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    a.check_finite("svd input")?;
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "svd of an empty {m}x{n} matrix"
        )));
    }
    let mut out = if m <= n {
        svd_wide(a)?
    } else {
        let t = svd_wide(&a.transpose())?;
        SvdResult {
            left_vectors: t.right_vectors,
            singular_values: t.singular_values,
            right_vectors: t.left_vectors,
        }
    };
    fix_signs(&mut out.left_vectors, &mut out.right_vectors);
    Ok(out)
}

fn svd_wide(a: &DenseMatrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut u = DenseMatrix::identity(m);
    orthogonalize_rows(&mut w, Some(&mut u))?;

    let norms: Vec<f64> = w.row_iter().map(|r| dot(r, r).sqrt()).collect();
    let order = descending_order(&norms);

    let mut sigma = Vec::with_capacity(m);
    let mut left = DenseMatrix::zeros(m, m);
    let mut right = DenseMatrix::zeros(n, m);
    let mut missing = Vec::new();
    for (c, &i) in order.iter().enumerate() {
        let s = norms[i];
        sigma.push(s);
        for r in 0..m {
            left.set(r, c, u.get(r, i));
        }
        if s > 0.0 {
            for (j, &wj) in w.row(i).iter().enumerate() {
                right.set(j, c, wj / s);
            }
        } else {
            missing.push(c);
        }
    }
    complete_orthonormal_columns(&mut right, &missing);
    Ok(SvdResult {
        left_vectors: left,
        singular_values: sigma,
        right_vectors: right,
    })
}

/// Right singular pairs of a matrix with `rows <= cols`, sorted descending.
pub(crate) fn right_svd(a: &DenseMatrix) -> Result<RightSvd> {
    debug_assert!(a.rows() <= a.cols());
    let mut w = a.clone();
    orthogonalize_rows(&mut w, None)?;
    let norms: Vec<f64> = w.row_iter().map(|r| dot(r, r).sqrt()).collect();
    let order = descending_order(&norms);
    let mut basis = DenseMatrix::zeros(a.rows(), a.cols());
    let mut sigma = Vec::with_capacity(a.rows());
    for (c, &i) in order.iter().enumerate() {
        let s = norms[i];
        sigma.push(s);
        if s > 0.0 {
            for (dst, src) in basis.row_mut(c).iter_mut().zip(w.row(i)) {
                *dst = src / s;
            }
        }
    }
    Ok(RightSvd {
        singular_values: sigma,
        basis,
    })
}

/// Rotates the rows of `w` until they are mutually orthogonal, accumulating the rotations
/// into the columns of `u` when given.
fn orthogonalize_rows(w: &mut DenseMatrix, mut u: Option<&mut DenseMatrix>) -> Result<()> {
    let (m, n) = w.shape();
    if m < 2 {
        return Ok(());
    }
    let cols = n;
    // rows this small carry no information at working precision and cannot be rotated
    // accurately (their products underflow)
    let negligible = JACOBI_NEGLIGIBLE_ROW * w.frobenius_norm_sq();
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m - 1 {
            for q in (p + 1)..m {
                let (alpha, beta, gamma) = {
                    let rp = w.row(p);
                    let rq = w.row(q);
                    (dot(rp, rp), dot(rq, rq), dot(rp, rq))
                };
                if gamma == 0.0
                    || alpha.min(beta) <= negligible
                    || gamma.abs() <= JACOBI_ORTHOGONALITY * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let data = w.as_mut_slice();
                let (head, tail) = data.split_at_mut(q * cols);
                let rp = &mut head[p * cols..(p + 1) * cols];
                let rq = &mut tail[..cols];
                for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
                if let Some(u) = u.as_deref_mut() {
                    for r in 0..u.rows() {
                        let (a, b) = (u.get(r, p), u.get(r, q));
                        u.set(r, p, c * a - s * b);
                        u.set(r, q, s * a + c * b);
                    }
                }
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::SvdNoConvergence {
        rows: m,
        cols: n,
        sweeps: JACOBI_MAX_SWEEPS,
    })
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // stable sort keeps index order for exact ties
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Replaces the listed (zero) columns of `v` with unit vectors orthogonal to all other columns.
fn complete_orthonormal_columns(v: &mut DenseMatrix, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let (n, k) = v.shape();
    let mut filled: Vec<usize> = (0..k).filter(|c| !missing.contains(c)).collect();
    let mut candidate = 0usize;
    for &c in missing {
        while candidate < n {
            let mut e = vec![0.0; n];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of Gram-Schmidt for stability
            for _ in 0..2 {
                for &f in &filled {
                    let proj: f64 = (0..n).map(|r| v.get(r, f) * e[r]).sum();
                    for (r, er) in e.iter_mut().enumerate() {
                        *er -= proj * v.get(r, f);
                    }
                }
            }
            let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for (r, er) in e.iter().enumerate() {
                    v.set(r, c, er / norm);
                }
                filled.push(c);
                break;
            }
        }
    }
}

fn fix_signs(left: &mut DenseMatrix, right: &mut DenseMatrix) {
    let k = right.cols();
    for c in 0..k {
        let first = (0..right.rows())
            .map(|r| right.get(r, c))
            .find(|v| v.abs() > 1e-12);
        if matches!(first, Some(v) if v < 0.0) {
            for r in 0..right.rows() {
                right.set(r, c, -right.get(r, c));
            }
            for r in 0..left.rows() {
                left.set(r, c, -left.get(r, c));
            }
        }
    }
}
