//! Small dense linear algebra on row-major square matrices.
//!
//! The systems solved here are K×K with K the number of moment features,
//! so plain Cholesky is all that is needed.

use crate::scalar::Scalar;

/// Cholesky factor `L` (row-major, lower triangular) of a symmetric matrix.
/// Returns `None` if the matrix is not numerically positive definite.
pub(crate) fn cholesky<S: Scalar>(a: &[S], k: usize) -> Option<Vec<S>> {
    debug_assert_eq!(a.len(), k * k);
    let mut l = vec![S::zero(); k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut sum = a[i * k + j];
            for p in 0..j {
                sum = sum - l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if !(sum > S::zero()) || !sum.is_finite() {
                    return None;
                }
                l[i * k + i] = sum.sqrt();
            } else {
                l[i * k + j] = sum / l[j * k + j];
            }
        }
    }
    Some(l)
}

pub(crate) fn cholesky_solve<S: Scalar>(l: &[S], k: usize, b: &[S]) -> Vec<S> {
    let mut z = vec![S::zero(); k];
    for i in 0..k {
        let mut sum = b[i];
        for p in 0..i {
            sum = sum - l[i * k + p] * z[p];
        }
        z[i] = sum / l[i * k + i];
    }
    let mut x = vec![S::zero(); k];
    for i in (0..k).rev() {
        let mut sum = z[i];
        for p in i + 1..k {
            sum = sum - l[p * k + i] * x[p];
        }
        x[i] = sum / l[i * k + i];
    }
    x
}

/// Solves `(A + shift·I) x = b` for symmetric positive semidefinite `A`,
/// escalating `shift` by ×10 until the factorization succeeds.
/// Returns the solution and the shift actually used.
pub(crate) fn regularized_solve<S: Scalar>(a: &[S], k: usize, b: &[S], shift: S) -> (Vec<S>, S) {
    let mut mu = shift;
    let mut shifted = a.to_vec();
    for _ in 0..64 {
        for i in 0..k {
            shifted[i * k + i] = a[i * k + i] + mu;
        }
        if let Some(l) = cholesky(&shifted, k) {
            return (cholesky_solve(&l, k, b), mu);
        }
        mu = mu * S::lit(10.0);
    }
    (vec![S::zero(); k], mu)
}

/// Inverse of a symmetric positive definite matrix.
pub(crate) fn spd_inverse<S: Scalar>(a: &[S], k: usize) -> Option<Vec<S>> {
    let l = cholesky(a, k)?;
    let mut inv = vec![S::zero(); k * k];
    let mut e = vec![S::zero(); k];
    for j in 0..k {
        e.iter_mut().for_each(|v| *v = S::zero());
        e[j] = S::one();
        let col = cholesky_solve(&l, k, &e);
        for i in 0..k {
            inv[i * k + j] = col[i];
        }
    }
    Some(inv)
}
