//! Classical Fisher information of measurements and optimal-measurement constructions.

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, inner, vec_axpy, vec_norm, CMatrix, RMatrix, C64};
use crate::qfim::QfimMatrix;
use crate::states::{state_derivatives, DensityMatrix, ParamFamily, PureFamily};

/// Outcome probabilities below this are treated as zero.
pub const ZERO_PROBABILITY: f64 = 1e-14;
/// Probability derivatives below this make a zero-probability outcome harmless.
pub const ZERO_DERIVATIVE: f64 = 1e-12;
/// Gram–Schmidt residuals below this are dropped.
pub const GRAM_SCHMIDT_TOL: f64 = 1e-10;
/// Overlap |⟨ψ|m⟩| below which a projector counts as orthogonal to the state.
pub const ORTHOGONAL_OVERLAP: f64 = 1e-8;

/// A positive-operator valued measure.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<CMatrix>,
    /// Present when every element is |m_k⟩⟨m_k|.
    vectors: Option<Vec<Vec<C64>>>,
}

impl Povm {
    /// Validates positivity (to −1e-10) and completeness (to 1e-9).
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::domain("POVM has no elements"))?;
        let d = first.rows();
        let mut total = CMatrix::zeros(d, d);
        for (k, e) in elements.iter().enumerate() {
            if e.shape() != (d, d) {
                return Err(Error::domain(format!("POVM element {k} is not {d}x{d}")));
            }
            if !e.is_hermitian(1e-10) {
                return Err(Error::domain(format!("POVM element {k} is not Hermitian")));
            }
            let min = hermitian_eig(e)?.eigenvalues[0];
            if min < -1e-10 {
                return Err(Error::domain(format!(
                    "POVM element {k} has negative eigenvalue {min:e}"
                )));
            }
            total += e;
        }
        let dev = total.max_abs_diff(&CMatrix::identity(d));
        if dev > 1e-9 {
            return Err(Error::domain(format!(
                "POVM elements sum to identity only within {dev:e}"
            )));
        }
        Ok(Povm {
            elements,
            vectors: None,
        })
    }

    /// Rank-one projective measurement onto an orthonormal basis.
    pub fn projective(vectors: Vec<Vec<C64>>) -> Result<Self> {
        let elements = vectors.iter().map(|v| CMatrix::projector(v)).collect();
        let mut p = Povm::new(elements)?;
        p.vectors = Some(vectors);
        Ok(p)
    }

    /// Measurement in the computational basis.
    pub fn computational(dim: usize) -> Self {
        let basis = (0..dim)
            .map(|k| {
                let mut v = vec![C64::new(0.0, 0.0); dim];
                v[k] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        Povm::projective(basis).expect("standard basis is complete")
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn vectors(&self) -> Option<&[Vec<C64>]> {
        self.vectors.as_deref()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.elements.iter().map(|e| rho.matrix().trace_product(e).re).collect()
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::domain(format!(
                "POVM acts on dimension {}, state has {dim}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Classical Fisher information matrix of a measurement.
#[derive(Clone, Debug)]
pub struct Cfim {
    pub cfim: QfimMatrix,
    pub probabilities: Vec<f64>,
    /// Outcomes with vanishing probability but nonvanishing derivative.
    pub singular_outcomes: Vec<usize>,
}

impl Cfim {
    pub fn is_singular(&self) -> bool {
        !self.singular_outcomes.is_empty()
    }
}

fn fisher_from(p: Vec<f64>, dp: Vec<Vec<f64>>) -> Cfim {
    let n = dp.len();
    let mut f = RMatrix::zeros(n, n);
    let mut singular = Vec::new();
    for (y, &py) in p.iter().enumerate() {
        if py < ZERO_PROBABILITY {
            if dp.iter().any(|d| d[y].abs() >= ZERO_DERIVATIVE) {
                singular.push(y);
            }
            continue;
        }
        for a in 0..n {
            for b in a..n {
                let v = dp[a][y] * dp[b][y] / py;
                f[(a, b)] += v;
                if a != b {
                    f[(b, a)] += v;
                }
            }
        }
    }
    Cfim {
        cfim: QfimMatrix::new(f),
        probabilities: p,
        singular_outcomes: singular,
    }
}

/// I_ab = Σ_y ∂_ap_y ∂_bp_y / p_y with the measurement held fixed.
pub fn cfim_state(rho: &DensityMatrix, drho: &[CMatrix], povm: &Povm) -> Result<Cfim> {
    povm.check_dim(rho.dim())?;
    let p = povm.probabilities(rho);
    let dp = drho
        .iter()
        .map(|d| {
            if d.shape() != (rho.dim(), rho.dim()) {
                return Err(Error::domain("derivative shape does not match state"));
            }
            Ok(povm.elements.iter().map(|e| d.trace_product(e).re).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(fisher_from(p, dp))
}

pub fn cfim(family: &ParamFamily, x: &[f64], povm: &Povm) -> Result<Cfim> {
    let rho = family.evaluate(x)?;
    let drho = state_derivatives(family, x)?;
    cfim_state(&rho, &drho, povm)
}

/// CFIM of a pure state. Rank-one measurements use amplitudes so tiny
/// probabilities keep their relative accuracy.
pub fn cfim_pure(psi: &[C64], dpsi: &[Vec<C64>], povm: &Povm) -> Result<Cfim> {
    povm.check_dim(psi.len())?;
    let Some(vectors) = povm.vectors() else {
        let rho = DensityMatrix::from_pure(psi)?;
        let drho: Vec<CMatrix> = dpsi
            .iter()
            .map(|d| crate::states::pure_density_derivative(psi, d))
            .collect();
        return cfim_state(&rho, &drho, povm);
    };
    let amp: Vec<C64> = vectors.iter().map(|m| inner(m, psi)).collect();
    let p = amp.iter().map(|a| a.norm_sqr()).collect();
    let dp = dpsi
        .iter()
        .map(|d| {
            vectors
                .iter()
                .zip(&amp)
                .map(|(m, a)| 2.0 * (a.conj() * inner(m, d)).re)
                .collect()
        })
        .collect();
    Ok(fisher_from(p, dp))
}

/// Eigenbasis measurement of an SLD with its classical Fisher information.
#[derive(Clone, Debug)]
pub struct SldMeasurement {
    pub povm: Povm,
    pub eigenvalues: Vec<f64>,
    /// Σ_i l_i²⟨l_i|ρ|l_i⟩
    pub frozen_cfi: f64,
}

/// Projects onto the eigenvectors of `l` and evaluates the frozen-measurement CFI at ρ.
pub fn sld_measurement(rho: &DensityMatrix, l: &CMatrix) -> Result<SldMeasurement> {
    if l.shape() != (rho.dim(), rho.dim()) || !l.is_hermitian(1e-10) {
        return Err(Error::domain("SLD must be Hermitian and match the state"));
    }
    let eig = hermitian_eig(l)?;
    let vectors: Vec<Vec<C64>> = (0..rho.dim()).map(|i| eig.vector(i)).collect();
    let frozen_cfi = vectors
        .iter()
        .zip(&eig.eigenvalues)
        .map(|(v, li)| li * li * inner(v, &rho.matrix().mul_vec(v)).re)
        .sum();
    Ok(SldMeasurement {
        povm: Povm::projective(vectors)?,
        eigenvalues: eig.eigenvalues,
        frozen_cfi,
    })
}

/// Orthonormal basis starting with ψ̂, completed by Gram–Schmidt over `seed` in order.
pub fn pure_projector_basis(psi_hat: &[C64], seed: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
    let d = psi_hat.len();
    let n = vec_norm(psi_hat);
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::domain(format!("ψ̂ has norm {n}, expected 1")));
    }
    let mut basis = vec![psi_hat.to_vec()];
    for s in seed {
        if basis.len() == d {
            break;
        }
        if s.len() != d {
            return Err(Error::domain("seed vector has wrong length"));
        }
        let mut v = s.clone();
        // two passes keep the result orthogonal to rounding level
        for _ in 0..2 {
            for b in &basis {
                let ov = inner(b, &v);
                vec_axpy(&mut v, -ov, b);
            }
        }
        let r = vec_norm(&v);
        if r < GRAM_SCHMIDT_TOL {
            continue;
        }
        basis.push(v.iter().map(|z| z / r).collect());
    }
    if basis.len() < d {
        return Err(Error::domain(format!(
            "seed basis spans only {} of {d} dimensions",
            basis.len()
        )));
    }
    Ok(basis)
}

/// Rank-one projective measurement containing |ψ̂⟩⟨ψ̂|.
pub fn optimal_pure_projectors(psi_hat: &[C64], seed: &[Vec<C64>]) -> Result<Povm> {
    Povm::projective(pure_projector_basis(psi_hat, seed)?)
}

pub fn standard_basis(dim: usize) -> Vec<Vec<C64>> {
    Povm::computational(dim).vectors.expect("projective")
}

/// CFIM at `x` of the projectors built around ψ(x − δ·1).
pub fn offset_cfim(family: &PureFamily, x: &[f64], delta: f64, seed: &[Vec<C64>]) -> Result<Cfim> {
    let shifted: Vec<f64> = x.iter().map(|v| v - delta).collect();
    let povm = optimal_pure_projectors(&family.evaluate(&shifted)?, seed)?;
    cfim_pure(&family.evaluate(x)?, &family.derivatives(x)?, &povm)
}

/// Sequence of offset CFIMs with δ halved until successive entries agree.
#[derive(Clone, Debug)]
pub struct LimitSweep {
    pub deltas: Vec<f64>,
    pub values: Vec<QfimMatrix>,
    pub converged: bool,
}

impl LimitSweep {
    pub fn last(&self) -> &QfimMatrix {
        self.values.last().expect("sweep has at least one point")
    }
}

pub fn offset_limit_sweep(
    family: &PureFamily,
    x: &[f64],
    seed: &[Vec<C64>],
    delta0: f64,
    tol: f64,
    max_halvings: usize,
) -> Result<LimitSweep> {
    let mut deltas = vec![delta0];
    let mut values = vec![offset_cfim(family, x, delta0, seed)?.cfim];
    let mut converged = false;
    let mut delta = delta0;
    for _ in 0..max_halvings {
        delta *= 0.5;
        let v = offset_cfim(family, x, delta, seed)?.cfim;
        let change = v.max_abs_diff(values.last().unwrap());
        deltas.push(delta);
        values.push(v);
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(LimitSweep {
        deltas,
        values,
        converged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverlapSet {
    /// ⟨ψ|m_k⟩ = 0
    A,
    B,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCheck {
    pub projector: usize,
    pub set: OverlapSet,
    pub a: usize,
    /// Second parameter index; equal to `a` for set-B conditions.
    pub b: usize,
    pub violation: f64,
}

#[derive(Clone, Debug)]
pub struct OptimalityReport {
    pub sets: Vec<OverlapSet>,
    pub checks: Vec<ConditionCheck>,
    pub max_violation: f64,
    pub holds: bool,
}

impl OptimalityReport {
    pub fn violated(&self, tol: f64) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(move |c| c.violation >= tol)
    }
}

/// Checks the pure-state conditions for a rank-one projective measurement to reach the QFIM.
///
/// Projectors orthogonal to ψ need Im(⟨∂_aψ|m⟩⟨m|∂_bψ⟩) = 0; the rest need
/// Im(⟨∂_aψ|m⟩⟨m|ψ⟩) = |⟨ψ|m⟩|² Im⟨∂_aψ|ψ⟩.
pub fn optimality_conditions(
    psi: &[C64],
    dpsi: &[Vec<C64>],
    projectors: &[Vec<C64>],
    tol: f64,
) -> Result<OptimalityReport> {
    let d = psi.len();
    if projectors.len() != d || projectors.iter().any(|m| m.len() != d) {
        return Err(Error::domain(format!("need {d} projectors of length {d}")));
    }
    let mut total = CMatrix::zeros(d, d);
    for m in projectors {
        total += &CMatrix::projector(m);
    }
    let dev = total.max_abs_diff(&CMatrix::identity(d));
    if dev > 1e-9 {
        return Err(Error::domain(format!("projectors are incomplete ({dev:e})")));
    }
    let berry: Vec<f64> = dpsi.iter().map(|da| inner(da, psi).im).collect();
    let mut sets = Vec::with_capacity(d);
    let mut checks = Vec::new();
    for (k, m) in projectors.iter().enumerate() {
        let ov = inner(m, psi);
        let dm: Vec<C64> = dpsi.iter().map(|da| inner(m, da)).collect();
        if ov.norm() < ORTHOGONAL_OVERLAP {
            sets.push(OverlapSet::A);
            for a in 0..dpsi.len() {
                for b in a + 1..dpsi.len() {
                    checks.push(ConditionCheck {
                        projector: k,
                        set: OverlapSet::A,
                        a,
                        b,
                        violation: (dm[a].conj() * dm[b]).im.abs(),
                    });
                }
            }
        } else {
            sets.push(OverlapSet::B);
            for a in 0..dpsi.len() {
                let lhs = (dm[a].conj() * ov).im;
                checks.push(ConditionCheck {
                    projector: k,
                    set: OverlapSet::B,
                    a,
                    b: a,
                    violation: (lhs - ov.norm_sqr() * berry[a]).abs(),
                });
            }
        }
    }
    let max_violation = checks.iter().map(|c| c.violation).fold(0.0, f64::max);
    Ok(OptimalityReport {
        sets,
        checks,
        max_violation,
        holds: max_violation < tol,
    })
}
