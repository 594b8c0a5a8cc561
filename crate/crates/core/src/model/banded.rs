//! Banded Cholesky factorization for symmetric positive definite matrices.
//!
//! Row `i` of the lower factor stores columns `i - bw ..= i` contiguously, so
//! both triangular sweeps walk memory forward.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    // n * (bw + 1); entry (i, j) lives at i * (bw + 1) + (j + bw - i)
    lower: Vec<f64>,
    inv_diag: Vec<f64>,
}

impl BandedCholesky {
    /// Factorizes the matrix whose lower band is given by `entry(i, j)` for
    /// `i - bw <= j <= i`.
    pub fn factorize(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let stride = bw + 1;
        let mut lower = vec![0.0; n * stride];
        let mut inv_diag = vec![0.0; n];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = entry(i, j);
                let k0 = j0.max(j.saturating_sub(bw));
                let row_i = i * stride + bw - i;
                let row_j = j * stride + bw - j;
                for k in k0..j {
                    s -= lower[row_i + k] * lower[row_j + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Factorization { row: i, pivot: s });
                    }
                    let d = s.sqrt();
                    lower[row_i + i] = d;
                    inv_diag[i] = 1.0 / d;
                } else {
                    lower[row_i + j] = s * inv_diag[j];
                }
            }
        }
        Ok(BandedCholesky {
            n,
            bw,
            lower,
            inv_diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Solves `L L^T x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let bw = self.bw;
        let stride = bw + 1;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            let row = &self.lower[i * stride + bw - i + j0..i * stride + bw];
            let mut s = b[i];
            for (l, y) in row.iter().zip(&b[j0..i]) {
                s -= l * y;
            }
            b[i] = s * self.inv_diag[i];
        }
        for i in (0..self.n).rev() {
            let xi = b[i] * self.inv_diag[i];
            b[i] = xi;
            let j0 = i.saturating_sub(bw);
            let row = &self.lower[i * stride + bw - i + j0..i * stride + bw];
            for (l, y) in row.iter().zip(&mut b[j0..i]) {
                *y -= l * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum())
            .collect()
    }

    #[test]
    fn solves_tridiagonal() {
        let n: usize = 7;
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            4.0
                        } else if i.abs_diff(j) == 1 {
                            -1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let chol = BandedCholesky::factorize(n, 1, |i, j| a[i][j]).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
        let mut b = dense_mul(&a, &x_true);
        chol.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let r = BandedCholesky::factorize(2, 1, |i, j| if i == j { 1.0 } else { -2.0 });
        assert!(matches!(r, Err(Error::Factorization { row: 1, .. })));
    }
}
