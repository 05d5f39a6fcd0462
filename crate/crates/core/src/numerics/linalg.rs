use super::{hermitian_eig, CMatrix, Matrix, RMatrix, Scalar};
use crate::error::{Error, Result};

/// Solves A X = B by LU with partial pivoting.
pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::domain("lu_solve shape mismatch"));
    }
    let n = a.rows();
    let m = b.cols();
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs();
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].modulus();
        for i in k + 1..n {
            let v = lu[(i, k)].modulus();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 || best <= f64::MIN_POSITIVE * scale.max(1.0) {
            return Err(Error::numerical("singular matrix in lu_solve"));
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            for j in 0..m {
                let t = x[(k, j)];
                x[(k, j)] = x[(p, j)];
                x[(p, j)] = t;
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            if f == T::zero() {
                continue;
            }
            lu[(i, k)] = f;
            for j in k + 1..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
            for j in 0..m {
                let v = x[(k, j)];
                x[(i, j)] -= f * v;
            }
        }
    }
    for j in 0..m {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in i + 1..n {
                s -= lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    if !x.is_finite() {
        return Err(Error::numerical("non-finite solution in lu_solve"));
    }
    Ok(x)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    lu_solve(a, &CMatrix::identity(a.rows()))
}

pub fn real_inverse(a: &RMatrix) -> Result<RMatrix> {
    lu_solve(a, &RMatrix::identity(a.rows()))
}

/// Result of a spectral pseudo-inverse.
#[derive(Clone, Debug)]
pub struct PseudoInverse {
    pub matrix: CMatrix,
    pub rank: usize,
}

/// Spectral pseudo-inverse of a Hermitian matrix, dropping eigenvalues below tol·max|λ|.
pub fn pseudo_inverse(m: &CMatrix, tol: f64) -> Result<PseudoInverse> {
    let e = hermitian_eig(m)?;
    let lmax = e.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let cut = tol * lmax;
    let mut rank = 0;
    let inv = e.reconstruct_with(|l| {
        if l.abs() > cut && l != 0.0 {
            1.0 / l
        } else {
            0.0
        }
    });
    for &l in &e.eigenvalues {
        if l.abs() > cut && l != 0.0 {
            rank += 1;
        }
    }
    Ok(PseudoInverse { matrix: inv, rank })
}

/// f(M) for Hermitian M through its spectrum.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    Ok(hermitian_eig(m)?.reconstruct_with(f))
}

/// Square root of a positive semidefinite matrix; small negative eigenvalues are clamped.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    hermitian_function(m, |l| l.max(0.0).sqrt())
}
