//! Quantum Fisher information: SLDs, QFIM routes, RLD, attainability and Cramér-Rao reports.

mod bloch;
mod bounds;
mod sld;

pub use bloch::{bloch_vector, gell_mann_basis, qfim_bloch};
pub use bounds::{
    attainability_check, attainability_pure, crb_report, Attainability, CrbReport,
    PureAttainability, ATTAINABILITY_TOL,
};
pub use sld::{sld_compute, sld_residual, SldMethod, SldSet};

use crate::error::{Error, Result};
use crate::numerics::{inner, real_inverse, symmetric_eig, vec_norm, CMatrix, Matrix, RMatrix, C64};
use crate::states::{pure_density_derivative, DensityMatrix, SpectralData, STATE_TOL};

/// Real symmetric positive semidefinite information matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct QfimMatrix {
    pub matrix: RMatrix,
}

impl QfimMatrix {
    /// Wraps `m`, symmetrizing away rounding noise.
    pub fn new(m: RMatrix) -> Self {
        QfimMatrix {
            matrix: m.hermitian_part(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        QfimMatrix::new(RMatrix::from_rows(rows))
    }

    pub fn zeros(n: usize) -> Self {
        QfimMatrix {
            matrix: RMatrix::zeros(n, n),
        }
    }

    pub fn n_params(&self) -> usize {
        self.matrix.rows()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.matrix[(a, b)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        symmetric_eig(&self.matrix)
            .map(|e| e.eigenvalues.first().copied().unwrap_or(0.0))
            .unwrap_or(f64::NAN)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    pub fn max_abs_diff(&self, other: &QfimMatrix) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }

    /// Entries flattened row-major.
    pub fn flatten(&self) -> Vec<f64> {
        self.matrix.as_slice().to_vec()
    }
}

/// QFIM from the spectral decomposition; degeneracy-safe and free of eigenvector derivatives.
///
/// Sums 2Re(∂_aρ_ij ∂_bρ_ji)/(λ_i + λ_j) over ordered eigen-index pairs with λ_i + λ_j > 0.
pub fn qfim_general(spectral: &SpectralData, drho: &[CMatrix]) -> Result<QfimMatrix> {
    sld::check_dims(spectral, drho)?;
    if spectral.rank() == 0 {
        return Err(Error::domain("empty support"));
    }
    let n = spectral.dim();
    let p = drho.len();
    let d: Vec<CMatrix> = drho.iter().map(|m| spectral.to_eigenbasis(m)).collect();
    let lam: Vec<f64> = (0..n).map(|i| spectral.lambda(i)).collect();
    let mut f = RMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let den = lam[i] + lam[j];
                    if den > 0.0 {
                        s += 2.0 * (d[a][(i, j)] * d[b][(j, i)]).re / den;
                    }
                }
            }
            f[(a, b)] = s;
            f[(b, a)] = s;
        }
    }
    Ok(QfimMatrix::new(f))
}

/// QFIM of a pure family together with its SLDs 2(|ψ⟩⟨∂ψ| + |∂ψ⟩⟨ψ|).
#[derive(Clone, Debug)]
pub struct PureQfim {
    pub qfim: QfimMatrix,
    pub slds: SldSet,
}

/// F_ab = 4Re(⟨∂_aψ|∂_bψ⟩ − ⟨∂_aψ|ψ⟩⟨ψ|∂_bψ⟩).
pub fn qfim_pure(psi: &[C64], dpsi: &[Vec<C64>]) -> Result<PureQfim> {
    let norm = vec_norm(psi);
    if (norm - 1.0).abs() > STATE_TOL {
        return Err(Error::domain(format!("state vector norm is {norm}, expected 1")));
    }
    for (a, d) in dpsi.iter().enumerate() {
        if d.len() != psi.len() {
            return Err(Error::domain(format!("derivative {a} has wrong length")));
        }
    }
    let f = pure_qgt(psi, dpsi).re().scale_real(4.0);
    let operators = dpsi
        .iter()
        .map(|d| pure_density_derivative(psi, d).scale_real(2.0))
        .collect();
    Ok(PureQfim {
        qfim: QfimMatrix::new(f),
        slds: SldSet {
            operators,
            method: SldMethod::Eigenbasis,
            kernel_block_zeroed: true,
        },
    })
}

/// Q_ab = ⟨∂_aψ|∂_bψ⟩ − ⟨∂_aψ|ψ⟩⟨ψ|∂_bψ⟩
pub(crate) fn pure_qgt(psi: &[C64], dpsi: &[Vec<C64>]) -> CMatrix {
    let p = dpsi.len();
    let ov: Vec<C64> = dpsi.iter().map(|d| inner(psi, d)).collect();
    Matrix::from_fn(p, p, |a, b| inner(&dpsi[a], &dpsi[b]) - ov[a].conj() * ov[b])
}

/// Which branch the qubit closed form used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitBranch {
    Mixed,
    Pure,
}

#[derive(Clone, Debug)]
pub struct QubitQfim {
    pub qfim: QfimMatrix,
    pub branch: QubitBranch,
}

const QUBIT_DET_THRESHOLD: f64 = 1e-12;

/// Basis-independent qubit QFIM; falls back to 2Tr(∂_aρ ∂_bρ) when det ρ ≤ 1e-12.
pub fn qfim_qubit_closed_form(rho: &DensityMatrix, drho: &[CMatrix]) -> Result<QubitQfim> {
    if rho.dim() != 2 {
        return Err(Error::domain(format!("qubit closed form needs dim 2, got {}", rho.dim())));
    }
    let m = rho.matrix();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
    let p = drho.len();
    let branch = if det > QUBIT_DET_THRESHOLD {
        QubitBranch::Mixed
    } else {
        QubitBranch::Pure
    };
    let mut f = RMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let tt = drho[a].trace_product(&drho[b]).re;
            let v = match branch {
                QubitBranch::Mixed => {
                    let x = (m * &drho[a]).trace_product(&(m * &drho[b])).re;
                    tt + x / det
                }
                QubitBranch::Pure => 2.0 * tt,
            };
            f[(a, b)] = v;
            f[(b, a)] = v;
        }
    }
    Ok(QubitQfim {
        qfim: QfimMatrix::new(f),
        branch,
    })
}

/// RLD information matrix Tr(∂_aρ ∂_bρ ρ⁻¹), complex Hermitian.
pub fn rld_qfim(rho: &DensityMatrix, drho: &[CMatrix]) -> Result<CMatrix> {
    let s = rho.spectral()?;
    if s.eigenvalues[0] <= 1e-10 {
        return Err(Error::unsupported(format!(
            "RLD needs a full-rank state, smallest eigenvalue is {:e}",
            s.eigenvalues[0]
        )));
    }
    let inv = crate::numerics::hermitian_function(rho.matrix(), |l| 1.0 / l)?;
    let p = drho.len();
    let right: Vec<CMatrix> = drho.iter().map(|d| d * &inv).collect();
    let mut f = CMatrix::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            f[(a, b)] = drho[a].trace_product(&right[b]);
        }
    }
    Ok(f.hermitian_part())
}

/// F(x) = Jᵀ F(y) J with J_ij = ∂y_i/∂x_j.
pub fn reparameterize(f: &QfimMatrix, jacobian: &RMatrix) -> Result<QfimMatrix> {
    if jacobian.rows() != f.n_params() {
        return Err(Error::domain(format!(
            "Jacobian has {} rows, QFIM has {} parameters",
            jacobian.rows(),
            f.n_params()
        )));
    }
    Ok(QfimMatrix::new(&(&jacobian.transpose() * &f.matrix) * jacobian))
}

/// F⁻¹ for a well-conditioned QFIM.
pub fn qfim_inverse(f: &QfimMatrix) -> Result<RMatrix> {
    real_inverse(&f.matrix)
}

/// ½Tr(ρ{L_a, L_b}) from a set of SLDs.
pub fn qfim_from_slds(rho: &DensityMatrix, slds: &SldSet) -> QfimMatrix {
    let p = slds.len();
    let m = rho.matrix();
    let rl: Vec<CMatrix> = slds.operators.iter().map(|l| m * l).collect();
    QfimMatrix::new(Matrix::from_fn(p, p, |a, b| {
        0.5 * (rl[a].trace_product(&slds.operators[b]) + rl[b].trace_product(&slds.operators[a])).re
    }))
}

#[cfg(test)]
mod tests;
