#![allow(dead_code)]

use dyadic_sketch::numerics::{symmetric_eigenvalues, DenseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DenseMatrix {
    DenseMatrix::from_rows(&gaussian_rows(rng, n, d), d).unwrap()
}

pub fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Rows `z U` with `z` Gaussian and `U` a fixed random `rank x d` matrix.
pub fn low_rank_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, rank: usize) -> Vec<Vec<f64>> {
    let basis = gaussian_rows(rng, rank, d);
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..rank).map(|_| rng.sample(StandardNormal)).collect();
            let mut x = vec![0.0; d];
            for (zi, b) in z.iter().zip(&basis) {
                x.iter_mut().zip(b).for_each(|(a, bj)| *a += zi * bj);
            }
            x
        })
        .collect()
}

/// Dense Gram matrix `XᵀX` accumulated row by row (the oracle).
pub fn gram_of(rows: &[Vec<f64>], d: usize) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(d, d);
    for x in rows {
        for i in 0..d {
            for j in 0..d {
                g.set(i, j, g.get(i, j) + x[i] * x[j]);
            }
        }
    }
    g
}

/// (min, max) eigenvalue of a symmetric matrix.
pub fn eig_range(a: &DenseMatrix) -> (f64, f64) {
    let v = symmetric_eigenvalues(a).unwrap();
    (v[0], v[v.len() - 1])
}

pub fn spectral(a: &DenseMatrix) -> f64 {
    let (lo, hi) = eig_range(a);
    lo.abs().max(hi.abs())
}

/// Dense `(reg I + SᵀS)⁻¹ v` by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i]);
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                if f != 0.0 {
                    for k in c..=n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}

pub fn dense_inverse(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    let mut out = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = dense_solve(a, &e);
        for i in 0..n {
            out.set(i, j, col[i]);
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
