use crate::error::{Error, Result};
use crate::scalar::{sup_norm, Scalar};

use super::SparseMatrix;

/// Jacobi-preconditioned conjugate gradients for symmetric positive
/// definite systems, used when a band factorization would be too large.
#[derive(Clone, Debug)]
pub struct ConjugateGradient<T> {
    matrix: SparseMatrix<T>,
    inv_diag: Vec<T>,
    rel_tol: T,
    max_iter: usize,
}

impl<T: Scalar> ConjugateGradient<T> {
    pub fn new(matrix: SparseMatrix<T>, rel_tol: T) -> Result<Self> {
        if !matrix.is_symmetric(T::tol(1e-13)) {
            return Err(Error::LinearSolve(
                "conjugate gradients need a symmetric matrix".into(),
            ));
        }
        let inv_diag = matrix
            .diagonal()
            .into_iter()
            .map(|d| {
                if d > T::zero() {
                    Ok(d.recip())
                } else {
                    Err(Error::LinearSolve("nonpositive diagonal".into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let max_iter = 10 * matrix.nrows() + 100;
        Ok(Self {
            matrix,
            inv_diag,
            rel_tol,
            max_iter,
        })
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = rhs.len();
        let mut x = vec![T::zero(); n];
        let target = self.rel_tol * sup_norm(rhs);
        if sup_norm(rhs) == T::zero() {
            return Ok(x);
        }
        let mut r = rhs.to_vec();
        let mut z: Vec<T> = r.iter().zip(&self.inv_diag).map(|(a, d)| *a * *d).collect();
        let mut p = z.clone();
        let mut rz: T = r.iter().zip(&z).map(|(a, b)| *a * *b).sum();
        for _ in 0..self.max_iter {
            let ap = self.matrix.mul_vec(&p);
            let pap: T = p.iter().zip(&ap).map(|(a, b)| *a * *b).sum();
            let alpha = rz / pap;
            for i in 0..n {
                x[i] = x[i] + alpha * p[i];
                r[i] = r[i] - alpha * ap[i];
            }
            if sup_norm(&r) <= target {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * self.inv_diag[i];
            }
            let rz_new: T = r.iter().zip(&z).map(|(a, b)| *a * *b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::LinearSolve(format!(
            "conjugate gradients did not reach {:e} in {} iterations",
            target.to_f64_lossy(),
            self.max_iter
        )))
    }
}
