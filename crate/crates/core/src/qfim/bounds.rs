use crate::error::Result;
use crate::numerics::{pseudo_inverse, RMatrix, C64};
use crate::states::DensityMatrix;

use super::{pure_qgt, QfimMatrix, SldSet};

/// Default tolerance for the weak-commutativity test.
pub const ATTAINABILITY_TOL: f64 = 1e-8;

/// Weak-commutativity diagnostics.
#[derive(Clone, Debug)]
pub struct Attainability {
    /// T_ab = Tr(ρ[L_a, L_b])/i, real antisymmetric.
    pub matrix: RMatrix,
    pub max_violation: f64,
    pub attainable: bool,
}

/// Checks Tr(ρ[L_a, L_b]) = 0 for every pair.
pub fn attainability_check(rho: &DensityMatrix, slds: &SldSet, tol: f64) -> Attainability {
    let p = slds.len();
    let m = rho.matrix();
    let mut t = RMatrix::zeros(p, p);
    for a in 0..p {
        for b in a + 1..p {
            let comm = slds.operators[a].commutator(&slds.operators[b]);
            let v = (m.trace_product(&comm) / C64::new(0.0, 1.0)).re;
            t[(a, b)] = v;
            t[(b, a)] = -v;
        }
    }
    let max_violation = t.max_abs();
    Attainability {
        matrix: t,
        max_violation,
        attainable: max_violation < tol,
    }
}

/// Pure-state diagnostics built from the quantum geometric tensor.
#[derive(Clone, Debug)]
pub struct PureAttainability {
    /// Im(⟨∂_aψ|∂_bψ⟩ − ⟨∂_aψ|ψ⟩⟨ψ|∂_bψ⟩)
    pub im_qgt: RMatrix,
    /// Berry curvature −2 Im⟨∂_aψ|∂_bψ⟩ (gauge-corrected).
    pub berry_curvature: RMatrix,
    pub max_violation: f64,
    /// True when the curvature is a null matrix.
    pub attainable: bool,
}

pub fn attainability_pure(psi: &[C64], dpsi: &[Vec<C64>], tol: f64) -> PureAttainability {
    let q = pure_qgt(psi, dpsi);
    let im = q.im();
    let curv = im.scale_real(-2.0);
    let max_violation = im.max_abs();
    PureAttainability {
        im_qgt: im,
        berry_curvature: curv,
        max_violation,
        attainable: max_violation < tol,
    }
}

/// Cramér-Rao quantities for n repetitions.
#[derive(Clone, Debug)]
pub struct CrbReport {
    pub qfim: QfimMatrix,
    /// F⁻¹, or the pseudo-inverse when F is singular.
    pub inverse: RMatrix,
    /// Tr(F⁻¹)/n
    pub trace_inverse: f64,
    /// Σ_a 1/(n F_aa); infinite when some F_aa vanishes.
    pub diagonal_bound_sum: f64,
    /// det F / Tr F for two parameters.
    pub effective_fisher: Option<f64>,
    pub singular: bool,
    pub rank: usize,
    /// Parameters whose diagonal entry vanishes.
    pub zero_diagonal: Vec<usize>,
    pub repetitions: u64,
}

const SINGULAR_TOL: f64 = 1e-12;

pub fn crb_report(f: &QfimMatrix, repetitions: u64) -> Result<CrbReport> {
    let n = repetitions.max(1) as f64;
    let p = f.n_params();
    let pinv = pseudo_inverse(&f.matrix.to_complex(), SINGULAR_TOL)?;
    let inverse = pinv.matrix.re().hermitian_part();
    let singular = pinv.rank < p;
    let trace_inverse = inverse.trace() / n;
    let mut zero_diagonal = Vec::new();
    let mut diag_sum = 0.0;
    for a in 0..p {
        let faa = f.get(a, a);
        if faa <= 0.0 {
            zero_diagonal.push(a);
            diag_sum = f64::INFINITY;
        } else {
            diag_sum += 1.0 / (n * faa);
        }
    }
    let effective_fisher = if p == 2 {
        let tr = f.matrix.trace();
        (tr != 0.0).then(|| f.matrix.det() / tr)
    } else {
        None
    };
    Ok(CrbReport {
        qfim: f.clone(),
        inverse,
        trace_inverse,
        diagonal_bound_sum: diag_sum,
        effective_fisher,
        singular,
        rank: pinv.rank,
        zero_diagonal,
        repetitions: repetitions.max(1),
    })
}
