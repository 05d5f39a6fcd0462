use super::{c, CMatrix, Matrix, RMatrix, Scalar, C64};
use crate::error::{Error, Result};

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending, eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.column(i)
    }

    /// V·diag(f(λ))·V†
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let w: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        Matrix::from_fn(n, n, |i, j| {
            let mut s = C64::new(0.0, 0.0);
            for (k, &wk) in w.iter().enumerate() {
                if wk != 0.0 {
                    s += v[(i, k)] * v[(j, k)].conj() * wk;
                }
            }
            s
        })
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(|l| l)
    }

    /// V† M V, the representation of `m` in the eigenbasis.
    pub fn to_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        &(&self.eigenvectors.adjoint() * m) * &self.eigenvectors
    }

    /// V M V†, mapping back from the eigenbasis.
    pub fn from_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        &(&self.eigenvectors * m) * &self.eigenvectors.adjoint()
    }
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: RMatrix,
}

const MAX_SWEEPS: usize = 100;

/// Hermitian eigensolver (cyclic complex Jacobi).
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::domain(format!(
            "hermitian_eig needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::domain("hermitian_eig input has non-finite entries"));
    }
    let n = m.rows();
    let scale = m.norm();
    if !m.is_hermitian(1e-10) {
        return Err(Error::domain("hermitian_eig input is not Hermitian"));
    }
    let mut a = m.hermitian_part();
    let mut v = CMatrix::identity(n);
    if n > 1 && scale > 0.0 {
        jacobi_sweeps(&mut a, &mut v, scale)?;
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

fn off_norm(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi_sweeps(a: &mut CMatrix, v: &mut CMatrix, scale: f64) -> Result<()> {
    let n = a.rows();
    let target = 1e-15 * scale;
    for _ in 0..MAX_SWEEPS {
        if off_norm(a) <= target {
            return Ok(());
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 || mag < 1e-18 * scale {
                    a[(p, q)] = c(0.0, 0.0);
                    a[(q, p)] = c(0.0, 0.0);
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // U = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
                let eph = phase.conj();
                let u_pp = c(cs, 0.0);
                let u_pq = c(sn, 0.0);
                let u_qp = eph * (-sn);
                let u_qq = eph * cs;
                rotate(a, v, p, q, [u_pp, u_pq, u_qp, u_qq]);
            }
        }
    }
    if off_norm(a) <= 1e-12 * scale {
        return Ok(());
    }
    Err(Error::numerical("Jacobi eigensolver did not converge"))
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize, u: [C64; 4]) {
    let n = a.rows();
    let [u_pp, u_pq, u_qp, u_qq] = u;
    // A <- A U (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    // A <- U† A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = c(0.0, 0.0);
    a[(q, p)] = c(0.0, 0.0);
    a[(p, p)] = c(a[(p, p)].re, 0.0);
    a[(q, q)] = c(a[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// Real symmetric eigensolver; eigenvalues ascending.
pub fn symmetric_eig(m: &RMatrix) -> Result<SymmetricEig> {
    if !m.is_square() {
        return Err(Error::domain("symmetric_eig needs a square matrix"));
    }
    if !m.is_symmetric(1e-10) {
        return Err(Error::domain("symmetric_eig input is not symmetric"));
    }
    let mut a = m.hermitian_part().to_complex();
    let n = a.rows();
    let scale = a.norm();
    let mut v = CMatrix::identity(n);
    if n > 1 && scale > 0.0 {
        // Real input keeps every rotation real (the phase is ±1).
        jacobi_sweeps(&mut a, &mut v, scale)?;
    }
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    Ok(SymmetricEig {
        eigenvalues: order.iter().map(|&i| diag[i]).collect(),
        eigenvectors: Matrix::from_fn(n, n, |r, k| v[(r, order[k])].re),
    })
}
