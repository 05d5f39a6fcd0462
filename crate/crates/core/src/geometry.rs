//! Fidelity, Bures geometry, monotone Riemannian metrics and the quantum geometric tensor.

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, inner, CMatrix, Matrix, RMatrix, C64};
use crate::qfim::{qfim_general, QfimMatrix};
use crate::states::{state_derivatives, DensityMatrix, ParamFamily, SpectralData};

/// Root fidelity Tr√(√ρ₁ρ₂√ρ₁) with the derived Bures quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fidelity {
    pub fidelity: f64,
    /// √(2 − 2f); for full-rank pairs evaluated without the cancellation in 2 − 2f.
    pub bures_distance: f64,
    /// arccos f, computed as 2 arcsin(D_B/2).
    pub bures_angle: f64,
}

pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<Fidelity> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::domain(format!(
            "fidelity of states with dimensions {} and {}",
            rho1.dim(),
            rho2.dim()
        )));
    }
    // Work on the support of the lower-rank state: eigenvalue noise of size ε would add √ε.
    let (s1, s2) = (rho1.spectral()?, rho2.spectral()?);
    let (a, b) = if s1.rank() <= s2.rank() { (&s1, rho2) } else { (&s2, rho1) };
    let r = a.rank();
    let m = Matrix::from_fn(r, r, |i, j| {
        let (vi, vj) = (a.vector(a.support_indices[i]), a.vector(a.support_indices[j]));
        let li = a.eigenvalues[a.support_indices[i]].sqrt();
        let lj = a.eigenvalues[a.support_indices[j]].sqrt();
        inner(&vi, &b.matrix().mul_vec(&vj)) * (li * lj)
    })
    .hermitian_part();
    let f: f64 = hermitian_eig(&m)?
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum();
    let mut f = f.clamp(0.0, 1.0);
    let mut d2 = (2.0 - 2.0 * f).max(0.0);
    if s1.is_full_rank() && s2.is_full_rank() {
        if let Some(d) = polar_bures_sq(&s1, &s2)? {
            d2 = d;
            f = (1.0 - 0.5 * d).clamp(0.0, 1.0);
        }
    }
    let d = d2.sqrt();
    Ok(Fidelity {
        fidelity: f,
        bures_distance: d,
        bures_angle: 2.0 * (0.5 * d).min(1.0).asin(),
    })
}

/// min_U ‖√ρ₁ − √ρ₂U‖²_HS with U the polar factor of √ρ₂√ρ₁.
///
/// A sum of squares of small entries, so nearby states keep full relative accuracy
/// where 2 − 2f would cancel. None when the product is too close to singular.
fn polar_bures_sq(s1: &SpectralData, s2: &SpectralData) -> Result<Option<f64>> {
    let a = s1.sqrt_matrix();
    let b = s2.sqrt_matrix();
    let c = &a.adjoint() * &b;
    let eig = hermitian_eig(&(&c * &c.adjoint()).hermitian_part())?;
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if eig.eigenvalues.iter().any(|&l| l <= 1e-12 * top) {
        return Ok(None);
    }
    let u = &c.adjoint() * &eig.reconstruct_with(|l| 1.0 / l.sqrt());
    let diff = &a - &(&b * &u);
    Ok(Some(diff.as_slice().iter().map(|z| z.norm_sqr()).sum()))
}

/// Comparison of the finite Bures distance with its quadratic QFIM prediction.
#[derive(Clone, Debug)]
pub struct BuresCheck {
    /// D²_B(ρ(x), ρ(x + dx))
    pub distance_sq: f64,
    /// ¼ dxᵀ F dx
    pub predicted: f64,
    pub residual: f64,
    /// The rank differs between x and x + dx, so the quadratic form need not hold.
    pub rank_changed: bool,
}

pub fn bures_qfim_check(family: &ParamFamily, x: &[f64], dx: &[f64]) -> Result<BuresCheck> {
    if dx.len() != x.len() {
        return Err(Error::domain("dx and x have different lengths"));
    }
    let rho = family.evaluate(x)?;
    let xs: Vec<f64> = x.iter().zip(dx).map(|(a, b)| a + b).collect();
    let shifted = family.evaluate(&xs)?;
    let s0 = rho.spectral()?;
    let s1 = shifted.spectral()?;
    let f = qfim_general(&s0, &state_derivatives(family, x)?)?;
    let fdx = f.matrix.mul_vec(dx);
    let predicted = 0.25 * dx.iter().zip(&fdx).map(|(a, b)| a * b).sum::<f64>();
    let d = fidelity(&rho, &shifted)?.bures_distance;
    let distance_sq = d * d;
    Ok(BuresCheck {
        distance_sq,
        predicted,
        residual: (distance_sq - predicted).abs(),
        rank_changed: s0.rank() != s1.rank(),
    })
}

/// Morozova-Čencov functions h(x) selecting a monotone metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricKind {
    /// (1 + x)/2
    Sld,
    /// x
    Rld,
    /// 1
    Lld,
    /// (√x + 1)²/4
    WignerYanase,
}

impl MetricKind {
    pub fn h(self, x: f64) -> f64 {
        match self {
            MetricKind::Sld => 0.5 * (1.0 + x),
            MetricKind::Rld => x,
            MetricKind::Lld => 1.0,
            MetricKind::WignerYanase => 0.25 * (x.sqrt() + 1.0).powi(2),
        }
    }
}

/// g_μν = ¼Σ_i ∂_μρ_ii∂_νρ_ii/λ_i + ½Σ_{i<j} Re(∂_μρ_ij ∂_νρ_ij*)/(λ_j h(λ_i/λ_j)) in the eigenbasis.
///
/// The SLD choice gives F/4.
pub fn riemannian_metric(spectral: &SpectralData, drho: &[CMatrix], kind: MetricKind) -> Result<RMatrix> {
    if !spectral.is_full_rank() {
        return Err(Error::unsupported(format!(
            "monotone metrics need a full-rank state, got rank {} of {}",
            spectral.rank(),
            spectral.dim()
        )));
    }
    let n = spectral.dim();
    let d: Vec<CMatrix> = drho.iter().map(|m| spectral.to_eigenbasis(m)).collect();
    let lam = &spectral.eigenvalues;
    let p = drho.len();
    let mut g = RMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let mut s = 0.0;
            for i in 0..n {
                s += 0.25 * (d[a][(i, i)] * d[b][(i, i)]).re / lam[i];
                for j in i + 1..n {
                    let w = lam[j] * kind.h(lam[i] / lam[j]);
                    s += 0.5 * (d[a][(i, j)] * d[b][(i, j)].conj()).re / w;
                }
            }
            g[(a, b)] = s;
            g[(b, a)] = s;
        }
    }
    Ok(g)
}

/// Quantum geometric tensor of a pure family.
#[derive(Clone, Debug)]
pub struct Qgt {
    /// Q_μν = ⟨∂_μψ|∂_νψ⟩ − ⟨∂_μψ|ψ⟩⟨ψ|∂_νψ⟩
    pub q: CMatrix,
    /// A_μ = i⟨ψ|∂_μψ⟩
    pub berry_connection: Vec<f64>,
    /// Υ_μν = −2 Im⟨∂_μψ|∂_νψ⟩
    pub berry_curvature: RMatrix,
}

impl Qgt {
    /// 4 Re Q
    pub fn qfim(&self) -> QfimMatrix {
        QfimMatrix::new(self.q.re().scale_real(4.0))
    }

    /// det F − 4 det Υ for two parameters; non-negative by the Robertson relation.
    pub fn robertson_gap(&self) -> Option<f64> {
        (self.q.rows() == 2).then(|| self.qfim().matrix.det() - 4.0 * self.berry_curvature.det())
    }
}

pub fn qgt(psi: &[C64], dpsi: &[Vec<C64>]) -> Result<Qgt> {
    let norm = crate::numerics::vec_norm(psi);
    if (norm - 1.0).abs() > crate::states::STATE_TOL {
        return Err(Error::domain(format!("state vector norm is {norm}, expected 1")));
    }
    let p = dpsi.len();
    let ov: Vec<C64> = dpsi.iter().map(|d| inner(psi, d)).collect();
    let q = Matrix::from_fn(p, p, |a, b| inner(&dpsi[a], &dpsi[b]) - ov[a].conj() * ov[b]);
    let berry_curvature = Matrix::from_fn(p, p, |a, b| -2.0 * inner(&dpsi[a], &dpsi[b]).im);
    Ok(Qgt {
        q,
        berry_connection: ov.iter().map(|o| -o.im).collect(),
        berry_curvature,
    })
}

/// Lower bound t ≥ 2 arccos f(ρ₀, ρ_t)/√F_tt on the evolution time.
pub fn speed_limit_bound(rho0: &DensityMatrix, rho_t: &DensityMatrix, f_tt: f64) -> Result<f64> {
    if !(f_tt > 0.0) {
        return Err(Error::domain(format!("time QFI must be positive, got {f_tt}")));
    }
    Ok(2.0 * fidelity(rho0, rho_t)?.bures_angle / f_tt.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{qubit_theta_phi, unitary_encoding};
    use crate::numerics::{c, cr, matrix_exp, pauli};
    use crate::qfim::qfim_pure;
    use crate::random::{random_density_matrix_with, random_hermitian, random_pure_state, random_unitary, rng};
    use crate::states::PureFamily;

    #[test]
    fn fidelity_basics() {
        let mut r = rng(41);
        let rho = random_density_matrix_with(&mut r, 3, 3).unwrap();
        assert!((fidelity(&rho, &rho).unwrap().fidelity - 1.0).abs() < 1e-10);
        let a = random_pure_state(&mut r, 3);
        let b = random_pure_state(&mut r, 3);
        let f = fidelity(&DensityMatrix::from_pure(&a).unwrap(), &DensityMatrix::from_pure(&b).unwrap()).unwrap();
        assert!((f.fidelity - inner(&a, &b).norm()).abs() < 1e-7);
        assert!(fidelity(&rho, &DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn nearby_states_keep_relative_accuracy() {
        // commuting states: D² = Σ(√p − √q)²
        let p: [f64; 3] = [0.5, 0.3, 0.2];
        let q: [f64; 3] = [0.5 + 2e-7, 0.3 - 1e-7, 0.2 - 1e-7];
        let u = random_unitary(&mut rng(44), 3);
        let diag = |v: &[f64]| {
            DensityMatrix::new_trusted(CMatrix::from_diag(&v.iter().map(|&x| cr(x)).collect::<Vec<_>>()))
                .conjugate_by(&u)
        };
        let exact: f64 = p.iter().zip(&q).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
        let d = fidelity(&diag(&p), &diag(&q)).unwrap().bures_distance;
        assert!((d * d - exact).abs() < 1e-6 * exact, "{} vs {exact}", d * d);
    }

    #[test]
    fn fidelity_basis_invariance_and_qubit_form() {
        let mut r = rng(42);
        for _ in 0..10 {
            let p = random_density_matrix_with(&mut r, 2, 2).unwrap();
            let q = random_density_matrix_with(&mut r, 2, 2).unwrap();
            let u = random_unitary(&mut r, 2);
            let f = fidelity(&p, &q).unwrap().fidelity;
            let fu = fidelity(&p.conjugate_by(&u), &q.conjugate_by(&u)).unwrap().fidelity;
            assert!((f - fu).abs() < 1e-9);
            let det = |m: &CMatrix| (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
            let closed = (p.matrix().trace_product(q.matrix()).re + 2.0 * (det(p.matrix()) * det(q.matrix())).sqrt()).sqrt();
            assert!((f - closed).abs() < 1e-9);
            // symmetric in its arguments
            assert!((f - fidelity(&q, &p).unwrap().fidelity).abs() < 1e-9);
        }
    }

    #[test]
    fn bures_quadratic_form_qubit() {
        let fam = qubit_theta_phi().to_density_family();
        let x = [0.6, 0.3];
        let zero = bures_qfim_check(&fam, &x, &[0.0, 0.0]).unwrap();
        assert!(zero.residual < 1e-12);
        let dir = [0.6, 0.8];
        let mut prev = f64::NAN;
        for k in 0..3 {
            let h = 1e-3 / 2f64.powi(k);
            let chk = bures_qfim_check(&fam, &x, &[h * dir[0], h * dir[1]]).unwrap();
            assert!(!chk.rank_changed);
            if k == 0 {
                assert!(chk.residual < 1e-8);
            } else {
                assert!(prev / chk.residual >= 7.0, "{prev} {}", chk.residual);
            }
            prev = chk.residual;
        }
    }

    #[test]
    fn bures_quadratic_form_full_rank() {
        let mut r = rng(43);
        let rho0 = random_density_matrix_with(&mut r, 3, 3).unwrap();
        let fam = unitary_encoding(rho0, vec![random_hermitian(&mut r, 3), random_hermitian(&mut r, 3)]);
        let x = [0.2, -0.1];
        let r1 = bures_qfim_check(&fam, &x, &[2e-3, 1e-3]).unwrap();
        let r2 = bures_qfim_check(&fam, &x, &[1e-3, 5e-4]).unwrap();
        assert!(r1.residual / r2.residual >= 7.0, "{} {}", r1.residual, r2.residual);
    }

    #[test]
    fn rank_change_is_flagged() {
        let fam = ParamFamily::new(1, |x| {
            let p = x[0] * x[0];
            DensityMatrix::new(CMatrix::from_diag(&[cr(1.0 - p), cr(p)]))
        });
        assert!(bures_qfim_check(&fam, &[0.0], &[1e-3]).unwrap().rank_changed);
        assert!(!bures_qfim_check(&fam, &[0.5], &[1e-3]).unwrap().rank_changed);
    }

    fn rotated_classical(p: f64) -> (SpectralData, Vec<CMatrix>, CMatrix) {
        let rho = DensityMatrix::new(CMatrix::from_diag(&[cr(p), cr(1.0 - p)])).unwrap();
        let k = pauli::x().scale_real(0.7);
        let d = vec![
            CMatrix::from_diag(&[cr(1.0), cr(-1.0)]),
            k.commutator(rho.matrix()).scale(c(0.0, -1.0)),
        ];
        (rho.spectral().unwrap(), d, k)
    }

    #[test]
    fn metric_family_two_level_sums() {
        let p = 0.3;
        let (s, d, k) = rotated_classical(p);
        let l0 = s.eigenvalues[0];
        let l1 = s.eigenvalues[1];
        // diagonal part: ¼(1/p + 1/(1−p)) for every h
        for kind in [MetricKind::Sld, MetricKind::Rld, MetricKind::Lld, MetricKind::WignerYanase] {
            let g = riemannian_metric(&s, &d, kind).unwrap();
            assert!((g[(0, 0)] - 0.25 * (1.0 / p + 1.0 / (1.0 - p))).abs() < 1e-12);
            let k01 = s.to_eigenbasis(&k)[(0, 1)].norm_sqr();
            let off = 0.5 * (l1 - l0).powi(2) * k01 / (l1 * kind.h(l0 / l1));
            assert!((g[(1, 1)] - off).abs() < 1e-12);
        }
        let wy = riemannian_metric(&s, &d, MetricKind::WignerYanase).unwrap();
        let k01 = s.to_eigenbasis(&k)[(0, 1)].norm_sqr();
        assert!((wy[(1, 1)] - 2.0 * (l0.sqrt() - l1.sqrt()).powi(2) * k01).abs() < 1e-12);
    }

    #[test]
    fn sld_metric_is_quarter_qfim() {
        let mut r = rng(44);
        for _ in 0..10 {
            let rho0 = random_density_matrix_with(&mut r, 2, 2).unwrap();
            let fam = unitary_encoding(rho0, vec![random_hermitian(&mut r, 2), random_hermitian(&mut r, 2)]);
            let rho = fam.evaluate(&[0.1, 0.2]).unwrap();
            let d = state_derivatives(&fam, &[0.1, 0.2]).unwrap();
            let s = rho.spectral().unwrap();
            let g = riemannian_metric(&s, &d, MetricKind::Sld).unwrap();
            let f = qfim_general(&s, &d).unwrap();
            assert!(g.scale_real(4.0).max_abs_diff(&f.matrix) < 1e-7);
        }
        let s = DensityMatrix::maximally_mixed(2).spectral().unwrap();
        assert_eq!(riemannian_metric(&s, &[CMatrix::zeros(2, 2)], MetricKind::Rld).unwrap().max_abs(), 0.0);
        let pure = DensityMatrix::from_pure(&[cr(1.0), cr(0.0)]).unwrap().spectral().unwrap();
        assert!(matches!(
            riemannian_metric(&pure, &[pauli::x()], MetricKind::Sld),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn qgt_examples() {
        let fam = qubit_theta_phi();
        let theta = 0.6;
        let x = [theta, 1.0];
        let q = qgt(&fam.evaluate(&x).unwrap(), &fam.derivatives(&x).unwrap()).unwrap();
        assert!((q.berry_curvature[(0, 1)] + (2.0 * theta).sin()).abs() < 1e-12);
        assert!((q.berry_curvature[(0, 1)] + q.berry_curvature[(1, 0)]).abs() < 1e-14);
        assert!(q.q.is_hermitian(1e-12));
        // A_φ = −sin²θ
        assert!((q.berry_connection[1] + theta.sin().powi(2)).abs() < 1e-12);
        // the qubit saturates det F ≥ 4 det Υ
        assert!(q.robertson_gap().unwrap().abs() < 1e-12);

        let real = PureFamily::new(1, |x| Ok(vec![cr(x[0].cos()), cr(x[0].sin())]));
        let qr = qgt(&real.evaluate(&[0.4]).unwrap(), &real.derivatives(&[0.4]).unwrap()).unwrap();
        assert_eq!(qr.berry_curvature.max_abs(), 0.0);
    }

    #[test]
    fn qgt_real_part_is_quarter_qfim_and_robertson() {
        let mut r = rng(45);
        for _ in 0..10 {
            let psi0 = random_pure_state(&mut r, 3);
            let g = [random_hermitian(&mut r, 3), random_hermitian(&mut r, 3)];
            let fam = PureFamily::new(2, move |x| {
                let h = &g[0].scale_real(x[0]) + &g[1].scale_real(x[1] * x[1] + x[1]);
                Ok(matrix_exp(&h.scale(c(0.0, -1.0)))?.mul_vec(&psi0))
            });
            let x = [0.3, 0.2];
            let (psi, d) = (fam.evaluate(&x).unwrap(), fam.derivatives(&x).unwrap());
            let q = qgt(&psi, &d).unwrap();
            assert!(q.qfim().max_abs_diff(&qfim_pure(&psi, &d).unwrap().qfim) < 1e-8);
            assert!(q.robertson_gap().unwrap() >= -1e-8);
        }
    }

    #[test]
    fn speed_limit_examples() {
        let omega = 1.7;
        let psi0 = DensityMatrix::from_pure(&[cr(1.0), cr(0.0)]).unwrap();
        assert_eq!(speed_limit_bound(&psi0, &psi0, 1.0).unwrap(), 0.0);
        for t in [0.1, 0.5, 1.5] {
            let u = matrix_exp(&pauli::x().scale(c(0.0, -0.5 * omega * t))).unwrap();
            let bound = speed_limit_bound(&psi0, &psi0.conjugate_by(&u), omega * omega).unwrap();
            assert!((bound - t).abs() < 1e-9);
        }
        assert!(speed_limit_bound(&psi0, &psi0, 0.0).is_err());
    }

    #[test]
    fn speed_limit_holds_on_non_geodesic_paths() {
        let mut r = rng(46);
        for _ in 0..5 {
            let h = random_hermitian(&mut r, 3);
            let rho0 = random_density_matrix_with(&mut r, 3, 2).unwrap();
            // QFI of t for ρ_t = e^{−iHt}ρ₀e^{iHt} is time independent
            let fam = unitary_encoding(rho0.clone(), vec![h.clone()]);
            let s = rho0.spectral().unwrap();
            let f_tt = qfim_general(&s, &state_derivatives(&fam, &[0.0]).unwrap()).unwrap().get(0, 0);
            for t in [0.2, 0.7, 1.3] {
                let rho_t = fam.evaluate(&[t]).unwrap();
                assert!(speed_limit_bound(&rho0, &rho_t, f_tt).unwrap() <= t + 1e-9);
            }
        }
    }
}
