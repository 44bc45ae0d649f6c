//! Dense linear-algebra kernel: matrices, SVD, symmetric eigensolver, power iteration,
//! Sherman–Morrison updates and SPD inversion.

mod eigen;
mod matrix;
mod svd;

pub use eigen::{symmetric_eigen, symmetric_eigenvalues, SymmetricEigen};
pub use matrix::{add_outer, axpy, dot, norm_sq, DenseMatrix};
pub(crate) use svd::right_svd;
pub use svd::{svd, SvdResult};

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::tolerances::{
    POWER_ITERATION_MAX, SHERMAN_MORRISON_DENOMINATOR, SYMMETRY,
};

/// Largest eigenvalue magnitude of a symmetric matrix by power iteration.
///
/// The start vector is a fixed pseudo-random vector so results are reproducible.
/// Iterates until the norm estimate stalls (relative change below 1e-13) or
/// `POWER_ITERATION_MAX` iterations have run.
pub fn spectral_norm(sym: &DenseMatrix) -> Result<f64> {
    sym.check_finite("spectral_norm input")?;
    ensure_dim("spectral_norm", sym.rows(), sym.cols())?;
    let asym = sym.asymmetry();
    if asym > SYMMETRY * sym.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let n = sym.rows();
    if n == 0 || sym.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = splitmix64(state);
            // uniform in (0.5, 1.5): strictly positive, so never orthogonal to a
            // nonnegative dominant eigenvector
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    normalize(&mut v);
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATION_MAX {
        let mut w = sym.matvec(&v)?;
        let norm = norm_sq(&w).sqrt();
        if norm == 0.0 {
            // start vector in the null space; restart from a basis vector
            v = vec![0.0; n];
            v[0] = 1.0;
            continue;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        let change = (norm - estimate).abs();
        estimate = norm;
        v = w;
        if change <= 1e-13 * norm {
            break;
        }
    }
    Ok(estimate)
}

fn normalize(v: &mut [f64]) {
    let n = norm_sq(v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// SplitMix64 step; also used by the harness for seed derivation.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `(P + u uᵀ)⁻¹` from `inv = P⁻¹` via Sherman–Morrison.
pub fn rank1_inverse_update(inv: &DenseMatrix, u: &[f64]) -> Result<DenseMatrix> {
    let mut out = inv.clone();
    rank1_inverse_update_in_place(&mut out, u)?;
    Ok(out)
}

/// In-place variant of [`rank1_inverse_update`]. Leaves `inv` untouched on error.
pub fn rank1_inverse_update_in_place(inv: &mut DenseMatrix, u: &[f64]) -> Result<()> {
    ensure_dim("rank1_inverse_update", inv.rows(), u.len())?;
    ensure_dim("rank1_inverse_update", inv.cols(), u.len())?;
    ensure_finite(u, "rank-1 update vector")?;
    if u.iter().all(|&x| x == 0.0) {
        return Ok(());
    }
    let w = inv.matvec(u)?;
    let denom = 1.0 + dot(u, &w);
    if denom <= SHERMAN_MORRISON_DENOMINATOR {
        return Err(Error::Numeric(format!(
            "Sherman-Morrison denominator {denom:e} is not positive"
        )));
    }
    add_outer(inv, -1.0 / denom, &w);
    symmetrize(inv);
    Ok(())
}

fn symmetrize(m: &mut DenseMatrix) {
    let n = m.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, avg);
            m.set(j, i, avg);
        }
    }
}

/// `‖A − A_[k]‖_F² = Σ_{i>k} σᵢ²`.
pub fn best_rank_k_residual(a: &DenseMatrix, k: usize) -> Result<f64> {
    let kmax = a.rows().min(a.cols());
    if k > kmax {
        return Err(Error::OutOfRange {
            what: "k",
            value: k as f64,
            range: "[0, min(rows, cols)]",
        });
    }
    if k == 0 {
        a.check_finite("best_rank_k_residual input")?;
        return Ok(a.frobenius_norm_sq());
    }
    let s = svd(a)?;
    Ok(s.singular_values[k..].iter().map(|x| x * x).sum())
}

/// Tail energies `Σ_{i>k} σᵢ²` for every `k = 0..=n` from the eigenvalues of a Gram matrix.
pub fn tail_energies_from_gram(gram: &DenseMatrix) -> Result<Vec<f64>> {
    let mut vals = symmetric_eigenvalues(gram)?;
    vals.reverse();
    let mut tails = vec![0.0; vals.len() + 1];
    for k in (0..vals.len()).rev() {
        tails[k] = tails[k + 1] + vals[k].max(0.0);
    }
    Ok(tails)
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    ensure_dim("cholesky", a.rows(), a.cols())?;
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if !(sum > 0.0) {
                    return Err(Error::Numeric(format!(
                        "matrix is not positive definite (pivot {i}: {sum:e})"
                    )));
                }
                l.set(i, i, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    a.check_finite("spd_inverse input")?;
    let n = a.rows();
    let l = cholesky(a)?;
    // invert L (lower triangular)
    let mut linv = DenseMatrix::zeros(n, n);
    for i in 0..n {
        linv.set(i, i, 1.0 / l.get(i, i));
        for j in 0..i {
            let mut sum = 0.0;
            for k in j..i {
                sum -= l.get(i, k) * linv.get(k, j);
            }
            linv.set(i, j, sum / l.get(i, i));
        }
    }
    // A⁻¹ = L⁻ᵀ L⁻¹
    let mut inv = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = 0.0;
            for k in i..n {
                sum += linv.get(k, i) * linv.get(k, j);
            }
            inv.set(i, j, sum);
            inv.set(j, i, sum);
        }
    }
    Ok(inv)
}

/// Condition number of a symmetric positive-definite matrix (ratio of extreme eigenvalues).
pub fn spd_condition_number(a: &DenseMatrix) -> Result<f64> {
    let vals = symmetric_eigenvalues(a)?;
    let (lo, hi) = (vals[0], vals[vals.len() - 1]);
    if !(lo > 0.0) {
        return Err(Error::Numeric(format!(
            "condition number of a non-positive-definite matrix (min eigenvalue {lo:e})"
        )));
    }
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_basics() {
        assert!((spectral_norm(&DenseMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-12);
        let d = DenseMatrix::from_diag(&[4.0, 1.0, 0.0]);
        assert!((spectral_norm(&d).unwrap() - 4.0).abs() < 1e-9);
        assert_eq!(spectral_norm(&DenseMatrix::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_negative_dominant() {
        let d = DenseMatrix::from_diag(&[-5.0, 2.0]);
        assert!((spectral_norm(&d).unwrap() - 5.0).abs() < 1e-9);
        // ±λ pair of equal magnitude
        let d = DenseMatrix::from_diag(&[-3.0, 3.0, 1.0]);
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_norm_rejects_asymmetric() {
        let a = DenseMatrix::new(2, 2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(spectral_norm(&a), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn sherman_morrison_identity_case() {
        let inv = rank1_inverse_update(&DenseMatrix::identity(3), &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(inv, DenseMatrix::from_diag(&[0.5, 1.0, 1.0]));
        let same = rank1_inverse_update(&DenseMatrix::identity(3), &[0.0; 3]).unwrap();
        assert_eq!(same, DenseMatrix::identity(3));
    }

    #[test]
    fn sherman_morrison_rejects_bad_denominator() {
        // not PD: P⁻¹ = -I gives 1 - ‖u‖² ≤ 0
        let inv = DenseMatrix::identity(2).scale(-1.0);
        assert!(matches!(
            rank1_inverse_update(&inv, &[1.0, 0.0]),
            Err(Error::Numeric(_))
        ));
        assert!(rank1_inverse_update(&DenseMatrix::identity(2), &[1.0]).is_err());
    }

    #[test]
    fn rank_k_residual_examples() {
        let d = DenseMatrix::from_diag(&[2.0, 1.0]);
        assert!((best_rank_k_residual(&d, 1).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(best_rank_k_residual(&d, 0).unwrap(), 5.0);
        let i3 = DenseMatrix::identity(3);
        assert!((best_rank_k_residual(&i3, 1).unwrap() - 2.0).abs() < 1e-14);
        assert!(best_rank_k_residual(&i3, 3).unwrap().abs() < 1e-14);
        assert!(matches!(
            best_rank_k_residual(&i3, 4),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let a = DenseMatrix::new(2, 2, vec![4.0, 1.0, 1.0, 3.0]).unwrap();
        let inv = spd_inverse(&a).unwrap();
        let prod = a.matmul(&inv).unwrap();
        assert!(prod.sub(&DenseMatrix::identity(2)).unwrap().max_abs() < 1e-14);
        assert!(spd_inverse(&DenseMatrix::from_diag(&[1.0, 0.0])).is_err());
    }
}
