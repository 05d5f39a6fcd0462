use crate::error::{Error, Result};
use crate::numerics::{kron, lu_solve, CMatrix, Matrix, C64};
use crate::states::SpectralData;

const SERIES_REL_TOL: f64 = 1e-12;
const SERIES_MAX_TERMS: usize = 200;

/// How the SLD equation ∂ρ = ½(ρL + Lρ) is solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SldMethod {
    /// Entries 2⟨λ_i|∂ρ|λ_j⟩/(λ_i + λ_j) in the eigenbasis of ρ.
    Eigenbasis,
    /// Linear solve of the vectorized equation (ρ⊗I + I⊗ρ*) vec L = 2 vec ∂ρ.
    Liouville,
    /// Neumann series in the anticommutator superoperator.
    Series,
}

/// One SLD per parameter.
#[derive(Clone, Debug)]
pub struct SldSet {
    pub operators: Vec<CMatrix>,
    pub method: SldMethod,
    /// True when the kernel-kernel block of each L_a was set to zero.
    pub kernel_block_zeroed: bool,
}

impl SldSet {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

/// Solves the SLD equation for every derivative with the requested method.
pub fn sld_compute(spectral: &SpectralData, drho: &[CMatrix], method: SldMethod) -> Result<SldSet> {
    check_dims(spectral, drho)?;
    if method != SldMethod::Eigenbasis && !spectral.is_full_rank() {
        return Err(Error::unsupported(format!(
            "{method:?} SLD needs a full-rank state, got rank {} of {}",
            spectral.rank(),
            spectral.dim()
        )));
    }
    let operators = match method {
        SldMethod::Eigenbasis => drho.iter().map(|d| eigenbasis_sld(spectral, d)).collect(),
        SldMethod::Liouville => liouville_slds(spectral, drho)?,
        SldMethod::Series => drho
            .iter()
            .map(|d| series_sld(spectral, d))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(SldSet {
        operators,
        method,
        kernel_block_zeroed: method == SldMethod::Eigenbasis && !spectral.is_full_rank(),
    })
}

pub(crate) fn check_dims(spectral: &SpectralData, drho: &[CMatrix]) -> Result<()> {
    let n = spectral.dim();
    for (a, d) in drho.iter().enumerate() {
        if d.shape() != (n, n) {
            return Err(Error::domain(format!(
                "derivative {a} has shape {:?}, state dimension is {n}",
                d.shape()
            )));
        }
    }
    Ok(())
}

fn eigenbasis_sld(spectral: &SpectralData, drho: &CMatrix) -> CMatrix {
    let n = spectral.dim();
    let d = spectral.to_eigenbasis(drho);
    let l = Matrix::from_fn(n, n, |i, j| {
        let s = spectral.lambda(i) + spectral.lambda(j);
        if s > 0.0 {
            d[(i, j)] * (2.0 / s)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    spectral.from_eigenbasis(&l).hermitian_part()
}

fn liouville_slds(spectral: &SpectralData, drho: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let n = spectral.dim();
    let rho = spectral.density();
    let id = CMatrix::identity(n);
    let sup = &kron(&rho, &id) + &kron(&id, &rho.conj());
    let mut rhs = CMatrix::zeros(n * n, drho.len());
    for (a, d) in drho.iter().enumerate() {
        for (k, v) in d.as_slice().iter().enumerate() {
            rhs[(k, a)] = v * 2.0;
        }
    }
    let sol = lu_solve(&sup, &rhs)?;
    Ok((0..drho.len())
        .map(|a| CMatrix::unvectorize(&sol.column(a), n, n).hermitian_part())
        .collect())
}

fn series_sld(spectral: &SpectralData, drho: &CMatrix) -> Result<CMatrix> {
    let rho = spectral.density();
    let lmin = spectral.eigenvalues[0];
    let lmax = *spectral.eigenvalues.last().unwrap();
    let omega = lmax + lmin;
    let mut term = drho.scale_real(2.0 / omega);
    let mut acc = term.clone();
    for _ in 1..SERIES_MAX_TERMS {
        let r = rho.anticommutator(&term);
        term.axpy(C64::new(-1.0 / omega, 0.0), &r);
        acc += &term;
        if term.norm() <= SERIES_REL_TOL * acc.norm() {
            return Ok(acc.hermitian_part());
        }
    }
    if term.norm() <= SERIES_REL_TOL * acc.norm() {
        return Ok(acc.hermitian_part());
    }
    Err(Error::numerical(format!(
        "SLD series did not converge in {SERIES_MAX_TERMS} terms (contraction factor {:.4})",
        (lmax - lmin) / omega
    )))
}

/// ‖∂ρ − ½(ρL + Lρ)‖ restricted to eigenbasis entries with at least one index in the support.
pub fn sld_residual(spectral: &SpectralData, drho: &CMatrix, l: &CMatrix) -> f64 {
    let n = spectral.dim();
    let d = spectral.to_eigenbasis(drho);
    let lt = spectral.to_eigenbasis(l);
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if !(spectral.in_support(i) || spectral.in_support(j)) {
                continue;
            }
            let r = d[(i, j)] - lt[(i, j)] * (0.5 * (spectral.lambda(i) + spectral.lambda(j)));
            s += r.norm_sqr();
        }
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{cr, pauli};
    use crate::random::{random_density_matrix_with, random_hermitian, rng};
    use crate::states::DensityMatrix;

    fn commutator_derivative(rho: &CMatrix, h: &CMatrix) -> CMatrix {
        // ∂ρ = -i[H, ρ]
        h.commutator(rho).scale(C64::new(0.0, -1.0))
    }

    #[test]
    fn constant_family_zero_sld() {
        let rho = DensityMatrix::maximally_mixed(3);
        let s = rho.spectral().unwrap();
        let d = vec![CMatrix::zeros(3, 3)];
        for m in [SldMethod::Eigenbasis, SldMethod::Liouville, SldMethod::Series] {
            let l = sld_compute(&s, &d, m).unwrap();
            assert!(l.operators[0].max_abs() < 1e-15);
        }
    }

    #[test]
    fn methods_agree_on_qubits() {
        let mut r = rng(12);
        for _ in 0..20 {
            // Moderately mixed qubits keep the series contraction below ~0.75.
            let pure = random_density_matrix_with(&mut r, 2, 1).unwrap();
            let rho = DensityMatrix::new(
                &pure.matrix().scale_real(0.5) + &CMatrix::identity(2).scale_real(0.25),
            )
            .unwrap();
            let h = random_hermitian(&mut r, 2);
            let d = vec![commutator_derivative(rho.matrix(), &h), pauli::z().scale_real(0.1)];
            let s = rho.spectral().unwrap();
            let e = sld_compute(&s, &d, SldMethod::Eigenbasis).unwrap();
            let l = sld_compute(&s, &d, SldMethod::Liouville).unwrap();
            let q = sld_compute(&s, &d, SldMethod::Series).unwrap();
            for a in 0..2 {
                assert!(e.operators[a].max_abs_diff(&l.operators[a]) < 1e-6);
                assert!(e.operators[a].max_abs_diff(&q.operators[a]) < 1e-6);
                assert!(sld_residual(&s, &d[a], &e.operators[a]) < 1e-7);
                assert!(e.operators[a].is_hermitian(1e-9));
                assert!(rho.expect(&e.operators[a]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn rank_deficient_rejected_by_liouville_and_series() {
        let rho = DensityMatrix::from_pure(&[cr(1.0), cr(0.0)]).unwrap();
        let s = rho.spectral().unwrap();
        let d = vec![pauli::x()];
        for m in [SldMethod::Liouville, SldMethod::Series] {
            match sld_compute(&s, &d, m) {
                Err(Error::Unsupported(msg)) => assert!(msg.contains("rank 1")),
                other => panic!("expected unsupported, got {other:?}"),
            }
        }
        let e = sld_compute(&s, &d, SldMethod::Eigenbasis).unwrap();
        assert!(e.kernel_block_zeroed);
        // pure-state SLD is 2∂ρ
        assert!(e.operators[0].max_abs_diff(&pauli::x().scale_real(2.0)) < 1e-12);
    }

    #[test]
    fn series_reports_non_convergence() {
        let rho = DensityMatrix::new(CMatrix::from_diag(&[cr(0.999), cr(0.001)])).unwrap();
        let s = rho.spectral().unwrap();
        let d = vec![pauli::z().scale_real(0.001)];
        assert!(matches!(
            sld_compute(&s, &d, SldMethod::Series),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn rank_deficient_random_states() {
        let mut r = rng(3);
        for _ in 0..10 {
            let rho = random_density_matrix_with(&mut r, 4, 2).unwrap();
            let h = random_hermitian(&mut r, 4);
            let d = commutator_derivative(rho.matrix(), &h);
            let s = rho.spectral().unwrap();
            let l = sld_compute(&s, std::slice::from_ref(&d), SldMethod::Eigenbasis).unwrap();
            assert!(sld_residual(&s, &d, &l.operators[0]) < 1e-7);
            assert!(rho.expect(&l.operators[0]).norm() < 1e-8);
        }
    }
}
