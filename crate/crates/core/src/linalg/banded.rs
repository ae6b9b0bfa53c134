use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::SparseMatrix;

/// LU factorization without pivoting in band storage.
///
/// Nonsingular M-matrices factor stably without row exchanges, so the band
/// profile of the input is preserved and fill stays inside it.
#[derive(Clone, Debug)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    // row i holds columns i - kl ..= i + ku
    band: Vec<T>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn factor(m: &SparseMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::LinearSolve("matrix is not square".into()));
        }
        let n = m.nrows();
        let (kl, ku) = m.bandwidths();
        let width = kl + ku + 1;
        let mut band = vec![T::zero(); n * width];
        for (i, j, v) in m.triplets() {
            band[i * width + j + kl - i] = v;
        }
        let mut lu = Self { n, kl, ku, band };
        for k in 0..n {
            let pivot = lu.band[k * width + kl];
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(Error::LinearSolve(format!("zero pivot at row {k}")));
            }
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + ku).min(n - 1);
            for i in k + 1..=last_row {
                let ik = i * width + k + kl - i;
                let l = lu.band[ik] / pivot;
                lu.band[ik] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = lu.band[k * width + j + kl - k];
                    let ij = i * width + j + kl - i;
                    lu.band[ij] = lu.band[ij] - l * kj;
                }
            }
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let width = self.kl + self.ku + 1;
        let mut x = rhs.to_vec();
        for i in 0..self.n {
            let start = i.saturating_sub(self.kl);
            let mut acc = x[i];
            for j in start..i {
                acc = acc - self.band[i * width + j + self.kl - i] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..self.n).rev() {
            let end = (i + self.ku).min(self.n - 1);
            let mut acc = x[i];
            for j in i + 1..=end {
                acc = acc - self.band[i * width + j + self.kl - i] * x[j];
            }
            x[i] = acc / self.band[i * width + self.kl];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        let mut b = SparseMatrix::builder(4, 4);
        b.push_row([(0, 2.0), (1, -1.0)]);
        b.push_row([(0, -1.0), (1, 2.0), (2, -1.0)]);
        b.push_row([(1, -1.0), (2, 2.0), (3, -1.0)]);
        b.push_row([(2, -1.0), (3, 2.0)]);
        let m: SparseMatrix<f64> = b.build();
        let lu = BandedLu::factor(&m).unwrap();
        let x = lu.solve(&[1.0, 0.0, 0.0, 1.0]);
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut b = SparseMatrix::builder(2, 2);
        b.push_row([(0, 1.0), (1, 1.0)]);
        b.push_row([(0, 1.0), (1, 1.0)]);
        assert!(BandedLu::factor(&b.build()).is_err());
    }

    #[test]
    fn nonsymmetric_band() {
        // upper bandwidth 2, lower bandwidth 1
        let mut b = SparseMatrix::builder(3, 3);
        b.push_row([(0, 4.0), (1, -1.0), (2, -1.0)]);
        b.push_row([(0, -2.0), (1, 4.0), (2, -1.0)]);
        b.push_row([(1, -1.0), (2, 4.0)]);
        let m = b.build();
        let lu = BandedLu::factor(&m).unwrap();
        let x = [1.0f64, 2.0, 3.0];
        let rhs = m.mul_vec(&x);
        let y = lu.solve(&rhs);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
