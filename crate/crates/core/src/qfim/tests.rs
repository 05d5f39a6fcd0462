use super::*;
use crate::families::{dephasing_qubit, qubit_theta_phi, unitary_encoding};
use crate::numerics::{c, cr, pauli, RMatrix};
use crate::random::{random_density_matrix_with, random_hermitian, random_pure_state, random_unitary, rng, Rng};
use crate::states::{state_derivatives, ParamFamily, PureFamily};
use std::f64::consts::FRAC_PI_4;

fn general(rho: &DensityMatrix, d: &[CMatrix]) -> QfimMatrix {
    qfim_general(&rho.spectral().unwrap(), d).unwrap()
}

/// A smooth non-unitary family: rotation plus x-dependent mixing towards a fixed state.
fn random_mixed_family(r: &mut Rng, dim: usize, n_params: usize) -> ParamFamily {
    let rho0 = random_density_matrix_with(r, dim, dim).unwrap();
    let sigma = random_density_matrix_with(r, dim, dim).unwrap();
    let gens: Vec<CMatrix> = (0..n_params).map(|_| random_hermitian(r, dim)).collect();
    let w: Vec<f64> = (0..n_params).map(|k| 0.5 + 0.3 * k as f64).collect();
    ParamFamily::new(n_params, move |x| {
        let s = 0.2 * (1.0 + x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().sin());
        let mixed = &rho0.matrix().scale_real(1.0 - s) + &sigma.matrix().scale_real(s);
        let u = crate::families::encoding_unitary(&gens, x)?;
        Ok(DensityMatrix::new_trusted(&(&u * &mixed) * &u.adjoint()))
    })
}

fn point(r: &mut Rng, n: usize) -> Vec<f64> {
    use rand::Rng as _;
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

#[test]
fn pure_qubit_theta_phi_closed_form() {
    let fam = qubit_theta_phi();
    for theta in [0.3, FRAC_PI_4, 1.1] {
        let x = [theta, 0.4];
        let psi = fam.evaluate(&x).unwrap();
        let d = fam.derivatives(&x).unwrap();
        let fp = qfim_pure(&psi, &d).unwrap().qfim;
        let expect = QfimMatrix::from_rows(&[vec![4.0, 0.0], vec![0.0, (2.0 * theta).sin().powi(2)]]);
        assert!(fp.max_abs_diff(&expect) < 1e-12);
        let dens = fam.to_density_family();
        let rho = dens.evaluate(&x).unwrap();
        let fg = general(&rho, &state_derivatives(&dens, &x).unwrap());
        assert!(fg.max_abs_diff(&expect) < 1e-10);
    }
}

#[test]
fn dephasing_fisher_entries() {
    let plus = DensityMatrix::from_pure(&[cr(0.5f64.sqrt()), cr(0.5f64.sqrt())]).unwrap();
    let fam = dephasing_qubit(&plus).unwrap();
    let (b, g, t) = (1.0, 0.1, 2.0);
    let x = [b, g, t];
    let rho = fam.evaluate(&x).unwrap();
    let f = general(&rho, &state_derivatives(&fam, &x).unwrap());
    assert!((f.get(0, 0) - 4.0 * (-2.0 * g * t).exp() * t * t).abs() < 1e-10);
    assert!(f.get(0, 1).abs() < 1e-12);
    let (p00, p11, p01) = (0.5, 0.5, 0.5f64);
    let fgg = 4.0 * p00 * p11 * p01 * p01 * t * t / (p00 * p11 * (2.0 * g * t).exp() - p01 * p01);
    assert!((f.get(1, 1) - fgg).abs() < 1e-10);
    let q = qfim_qubit_closed_form(&rho, &state_derivatives(&fam, &x).unwrap()).unwrap();
    assert_eq!(q.branch, QubitBranch::Mixed);
    assert!(q.qfim.max_abs_diff(&f) < 1e-10);
}

#[test]
fn constant_family_is_zero() {
    let rho = DensityMatrix::maximally_mixed(2);
    let d = vec![CMatrix::zeros(2, 2); 2];
    assert_eq!(general(&rho, &d).matrix.max_abs(), 0.0);
    assert_eq!(qfim_qubit_closed_form(&rho, &d).unwrap().qfim.matrix.max_abs(), 0.0);
    let psi = [cr(1.0), cr(0.0)];
    let z = vec![vec![cr(0.0); 2]];
    assert_eq!(qfim_pure(&psi, &z).unwrap().qfim.matrix.max_abs(), 0.0);
}

#[test]
fn pure_matches_general_on_four_levels() {
    let mut r = rng(77);
    for _ in 0..10 {
        let psi0 = random_pure_state(&mut r, 4);
        let gens: Vec<CMatrix> = (0..3).map(|_| random_hermitian(&mut r, 4)).collect();
        let g2 = gens.clone();
        let fam = PureFamily::new(3, move |x| {
            Ok(crate::families::encoding_unitary(&g2, x)?.mul_vec(&psi0))
        });
        let x = point(&mut r, 3);
        let psi = fam.evaluate(&x).unwrap();
        let dpsi = fam.derivatives(&x).unwrap();
        let fp = qfim_pure(&psi, &dpsi).unwrap().qfim;
        let dens = fam.to_density_family();
        let rho = dens.evaluate(&x).unwrap();
        let fg = general(&rho, &state_derivatives(&dens, &x).unwrap());
        assert!(fp.max_abs_diff(&fg) < 1e-7, "{}", fp.max_abs_diff(&fg));
    }
}

#[test]
fn bloch_and_closed_form_match_general_on_qubits() {
    let mut r = rng(5);
    let k = gell_mann_basis(2);
    for _ in 0..30 {
        let fam = random_mixed_family(&mut r, 2, 2);
        let x = point(&mut r, 2);
        let rho = fam.evaluate(&x).unwrap();
        let d = state_derivatives(&fam, &x).unwrap();
        let fg = general(&rho, &d);
        let rv = bloch_vector(rho.matrix(), &k);
        let dr: Vec<Vec<f64>> = d.iter().map(|m| bloch_vector(m, &k)).collect();
        let fb = qfim_bloch(&rv, &dr, 2, &k).unwrap();
        let fq = qfim_qubit_closed_form(&rho, &d).unwrap().qfim;
        assert!(fb.max_abs_diff(&fg) < 1e-7);
        assert!(fq.max_abs_diff(&fg) < 1e-7);
        assert!(fg.is_psd(1e-8));
    }
}

#[test]
fn general_bloch_on_qutrits() {
    let mut r = rng(6);
    let k = gell_mann_basis(3);
    for _ in 0..5 {
        let fam = random_mixed_family(&mut r, 3, 2);
        let x = point(&mut r, 2);
        let rho = fam.evaluate(&x).unwrap();
        let d = state_derivatives(&fam, &x).unwrap();
        let fg = general(&rho, &d);
        let rv = bloch_vector(rho.matrix(), &k);
        let dr: Vec<Vec<f64>> = d.iter().map(|m| bloch_vector(m, &k)).collect();
        let fb = qfim_bloch(&rv, &dr, 3, &k).unwrap();
        assert!(fb.max_abs_diff(&fg) < 1e-7, "{}", fb.max_abs_diff(&fg));
    }
}

#[test]
fn pure_qubit_branch_of_closed_form() {
    let fam = qubit_theta_phi().to_density_family();
    let x = [0.6, 0.2];
    let rho = fam.evaluate(&x).unwrap();
    let d = state_derivatives(&fam, &x).unwrap();
    let q = qfim_qubit_closed_form(&rho, &d).unwrap();
    assert_eq!(q.branch, QubitBranch::Pure);
    assert!(q.qfim.max_abs_diff(&general(&rho, &d)) < 1e-10);
    assert!(qfim_qubit_closed_form(&DensityMatrix::maximally_mixed(3), &[]).is_err());
}

#[test]
fn rld_classical_family() {
    for p in [0.2, 0.5, 0.73] {
        let rho = DensityMatrix::new(CMatrix::from_diag(&[cr(p), cr(1.0 - p)])).unwrap();
        let d = vec![CMatrix::from_diag(&[cr(1.0), cr(-1.0)])];
        let f = rld_qfim(&rho, &d).unwrap();
        let oracle = 1.0 / p + 1.0 / (1.0 - p);
        assert!((f[(0, 0)].re - oracle).abs() < 1e-12);
        assert!((general(&rho, &d).get(0, 0) - oracle).abs() < 1e-12);
    }
    let zero = rld_qfim(&DensityMatrix::maximally_mixed(2), &[CMatrix::zeros(2, 2)]).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
    let pure = DensityMatrix::from_pure(&[cr(1.0), cr(0.0)]).unwrap();
    assert!(matches!(rld_qfim(&pure, &[pauli::x()]), Err(Error::Unsupported(_))));
}

#[test]
fn rld_dominates_sld_diagonal() {
    let mut r = rng(8);
    for _ in 0..20 {
        let fam = random_mixed_family(&mut r, 2, 2);
        let x = point(&mut r, 2);
        let rho = fam.evaluate(&x).unwrap();
        let d = state_derivatives(&fam, &x).unwrap();
        let rld = rld_qfim(&rho, &d).unwrap();
        let sld = general(&rho, &d);
        for a in 0..2 {
            assert!(rld[(a, a)].re >= sld.get(a, a) - 1e-8);
            assert!(rld[(a, a)].im.abs() < 1e-12);
        }
    }
}

#[test]
fn reparameterization_rules() {
    let f = QfimMatrix::from_rows(&[vec![4.0, 0.3], vec![0.3, 1.0]]);
    assert_eq!(reparameterize(&f, &RMatrix::identity(2)).unwrap(), f);
    let one = QfimMatrix::from_rows(&[vec![1.5]]);
    let scaled = reparameterize(&one, &RMatrix::from_rows(&[vec![2.0]])).unwrap();
    assert!((scaled.get(0, 0) - 6.0).abs() < 1e-15);
    assert!(reparameterize(&f, &RMatrix::identity(3)).is_err());

    // y = (θ+φ, θ−φ): compute F in y-coordinates directly, map back with J = ∂y/∂x.
    let fam_y = PureFamily::new(2, |y| {
        let (t, p) = ((y[0] + y[1]) / 2.0, (y[0] - y[1]) / 2.0);
        Ok(vec![cr(t.cos()), C64::from_polar(t.sin(), p)])
    });
    let (theta, phi) = (0.5, 0.2);
    let y = [theta + phi, theta - phi];
    let fy = qfim_pure(&fam_y.evaluate(&y).unwrap(), &fam_y.derivatives(&y).unwrap())
        .unwrap()
        .qfim;
    let j = RMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]);
    let fx = reparameterize(&fy, &j).unwrap();
    let direct = QfimMatrix::from_rows(&[vec![4.0, 0.0], vec![0.0, (2.0 * theta).sin().powi(2)]]);
    assert!(fx.max_abs_diff(&direct) < 1e-7);
}

#[test]
fn attainability_cases() {
    // single parameter
    let fam = qubit_theta_phi().to_density_family();
    let x = [0.5, 0.1];
    let rho = fam.evaluate(&x).unwrap();
    let d = state_derivatives(&fam, &x).unwrap();
    let s = rho.spectral().unwrap();
    let l1 = sld_compute(&s, &d[..1], SldMethod::Eigenbasis).unwrap();
    assert!(attainability_check(&rho, &l1, 1e-8).attainable);

    // two parameters: Im⟨∂θψ|∂φψ⟩ = sinθcosθ
    let l2 = sld_compute(&s, &d, SldMethod::Eigenbasis).unwrap();
    let att = attainability_check(&rho, &l2, 1e-8);
    assert!(!att.attainable);
    let pfam = qubit_theta_phi();
    let pa = attainability_pure(&pfam.evaluate(&x).unwrap(), &pfam.derivatives(&x).unwrap(), 1e-8);
    assert!(!pa.attainable);
    assert!((pa.im_qgt[(0, 1)] - 0.5f64.sin() * 0.5f64.cos()).abs() < 1e-12);
    assert!((pa.berry_curvature[(0, 1)] + (1.0f64).sin()).abs() < 1e-12);
    // for pure states Tr(ρ[L_a, L_b])/i = 8 Im Q_ab
    assert!((att.matrix[(0, 1)] - 8.0 * pa.im_qgt[(0, 1)]).abs() < 1e-10);

    // commuting generators on a pure probe
    let probe = [cr(0.6), c(0.0, 0.8)];
    let g = vec![pauli::z(), pauli::z().scale_real(0.5)];
    let ufam = unitary_encoding(DensityMatrix::from_pure(&probe).unwrap(), g);
    let x = [0.3, -0.2];
    let rho = ufam.evaluate(&x).unwrap();
    let d = state_derivatives(&ufam, &x).unwrap();
    let l = sld_compute(&rho.spectral().unwrap(), &d, SldMethod::Eigenbasis).unwrap();
    assert!(attainability_check(&rho, &l, 1e-8).attainable);
}

#[test]
fn crb_examples() {
    let f = QfimMatrix::from_rows(&[vec![4.0, 0.0], vec![0.0, (2.0 * FRAC_PI_4).sin().powi(2)]]);
    let r = crb_report(&f, 1).unwrap();
    assert!((r.trace_inverse - 1.25).abs() < 1e-12);
    assert!(!r.singular);
    assert!(r.trace_inverse >= r.diagonal_bound_sum - 1e-9);
    let r10 = crb_report(&f, 10).unwrap();
    assert!((r10.trace_inverse - 0.125).abs() < 1e-12);

    let sing = QfimMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
    let rs = crb_report(&sing, 1).unwrap();
    assert!(rs.singular);
    assert_eq!(rs.rank, 1);
    assert!((rs.inverse.trace() - 0.5).abs() < 1e-12);

    let two = QfimMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
    let rt = crb_report(&two, 1).unwrap();
    assert!((rt.effective_fisher.unwrap() - 0.75).abs() < 1e-14);
    for a in 0..2 {
        assert!(rt.inverse[(a, a)] >= 1.0 / two.get(a, a) - 1e-9);
    }

    let zero = QfimMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
    let rz = crb_report(&zero, 1).unwrap();
    assert_eq!(rz.zero_diagonal, vec![1]);
    assert!(rz.diagonal_bound_sum.is_infinite());
}

#[test]
fn unitary_invariance() {
    let mut r = rng(21);
    for _ in 0..10 {
        let fam = random_mixed_family(&mut r, 3, 2);
        let x = point(&mut r, 2);
        let rho = fam.evaluate(&x).unwrap();
        let d = state_derivatives(&fam, &x).unwrap();
        let u = random_unitary(&mut r, 3);
        let rho_u = rho.conjugate_by(&u);
        let d_u: Vec<CMatrix> = d.iter().map(|m| &(&u * m) * &u.adjoint()).collect();
        assert!(general(&rho, &d).max_abs_diff(&general(&rho_u, &d_u)) < 1e-7);
    }
}

#[test]
fn additivity_on_products() {
    let mut r = rng(22);
    for _ in 0..10 {
        let f1 = random_mixed_family(&mut r, 2, 2);
        let f2 = random_mixed_family(&mut r, 2, 2);
        let x = point(&mut r, 2);
        let (r1, r2) = (f1.evaluate(&x).unwrap(), f2.evaluate(&x).unwrap());
        let (d1, d2) = (
            state_derivatives(&f1, &x).unwrap(),
            state_derivatives(&f2, &x).unwrap(),
        );
        let prod = r1.tensor(&r2);
        let dp: Vec<CMatrix> = (0..2)
            .map(|a| &d1[a].kron(r2.matrix()) + &r1.matrix().kron(&d2[a]))
            .collect();
        let sum = &general(&r1, &d1).matrix + &general(&r2, &d2).matrix;
        assert!(general(&prod, &dp).matrix.max_abs_diff(&sum) < 1e-6);
    }
}

fn direct_sum(a: &CMatrix, b: &CMatrix, mu: f64) -> CMatrix {
    let (n, m) = (a.rows(), b.rows());
    let mut out = CMatrix::zeros(n + m, n + m);
    out.set_block(0, 0, &a.scale_real(mu));
    out.set_block(n, n, &b.scale_real(1.0 - mu));
    out
}

#[test]
fn direct_sum_rule() {
    let mut r = rng(23);
    for _ in 0..10 {
        let f1 = random_mixed_family(&mut r, 2, 2);
        let f2 = random_mixed_family(&mut r, 3, 2);
        let x = point(&mut r, 2);
        let mu = 0.35;
        let (r1, r2) = (f1.evaluate(&x).unwrap(), f2.evaluate(&x).unwrap());
        let (d1, d2) = (
            state_derivatives(&f1, &x).unwrap(),
            state_derivatives(&f2, &x).unwrap(),
        );
        let rho = DensityMatrix::new(direct_sum(r1.matrix(), r2.matrix(), mu)).unwrap();
        let d: Vec<CMatrix> = (0..2).map(|a| direct_sum(&d1[a], &d2[a], mu)).collect();
        let expect = &general(&r1, &d1).matrix.scale_real(mu) + &general(&r2, &d2).matrix.scale_real(1.0 - mu);
        assert!(general(&rho, &d).matrix.max_abs_diff(&expect) < 1e-6);
    }
}

#[test]
fn convexity_in_loewner_order() {
    let mut r = rng(24);
    for _ in 0..10 {
        let f1 = random_mixed_family(&mut r, 3, 2);
        let f2 = random_mixed_family(&mut r, 3, 2);
        let x = point(&mut r, 2);
        let p = 0.3;
        let (r1, r2) = (f1.evaluate(&x).unwrap(), f2.evaluate(&x).unwrap());
        let (d1, d2) = (
            state_derivatives(&f1, &x).unwrap(),
            state_derivatives(&f2, &x).unwrap(),
        );
        let mix = DensityMatrix::new(&r1.matrix().scale_real(p) + &r2.matrix().scale_real(1.0 - p)).unwrap();
        let dm: Vec<CMatrix> = (0..2).map(|a| &d1[a].scale_real(p) + &d2[a].scale_real(1.0 - p)).collect();
        let gap = &(&general(&r1, &d1).matrix.scale_real(p) + &general(&r2, &d2).matrix.scale_real(1.0 - p))
            - &general(&mix, &dm).matrix;
        assert!(QfimMatrix::new(gap).min_eigenvalue() >= -1e-7);
    }
}

#[test]
fn monotone_under_dephasing() {
    let mut r = rng(25);
    let channel = |m: &CMatrix| {
        let z = pauli::z();
        &m.scale_real(0.7) + &(&(&z * m) * &z).scale_real(0.3)
    };
    for _ in 0..10 {
        let fam = random_mixed_family(&mut r, 2, 2);
        let x = point(&mut r, 2);
        let rho = fam.evaluate(&x).unwrap();
        let d = state_derivatives(&fam, &x).unwrap();
        let out = DensityMatrix::new(channel(rho.matrix())).unwrap();
        let dout: Vec<CMatrix> = d.iter().map(channel).collect();
        let gap = &general(&rho, &d).matrix - &general(&out, &dout).matrix;
        assert!(QfimMatrix::new(gap).min_eigenvalue() >= -1e-7);
    }
}

#[test]
fn inverse_diagonal_dominates() {
    let mut r = rng(26);
    for _ in 0..10 {
        let fam = random_mixed_family(&mut r, 3, 3);
        let x = point(&mut r, 3);
        let f = general(&fam.evaluate(&x).unwrap(), &state_derivatives(&fam, &x).unwrap());
        let inv = qfim_inverse(&f).unwrap();
        for a in 0..3 {
            assert!(inv[(a, a)] >= 1.0 / f.get(a, a) - 1e-9);
        }
        let rep = crb_report(&f, 1).unwrap();
        assert!(rep.trace_inverse >= rep.diagonal_bound_sum - 1e-9);
    }
}

#[test]
fn sld_qfim_consistency() {
    let mut r = rng(27);
    for _ in 0..10 {
        let fam = random_mixed_family(&mut r, 4, 2);
        let x = point(&mut r, 2);
        let rho = fam.evaluate(&x).unwrap();
        let d = state_derivatives(&fam, &x).unwrap();
        let s = rho.spectral().unwrap();
        let l = sld_compute(&s, &d, SldMethod::Liouville).unwrap();
        assert!(qfim_from_slds(&rho, &l).max_abs_diff(&general(&rho, &d)) < 1e-8);
    }
}
