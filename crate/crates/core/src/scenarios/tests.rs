use super::*;
use crate::fock::{squeezed_population, squeezed_vacuum};
use crate::numerics::{c, cr, C64};
use crate::random::rng;
use rand::Rng;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

fn plus() -> DensityMatrix {
    DensityMatrix::from_pure(&[cr(FRAC_1_SQRT_2), cr(FRAC_1_SQRT_2)]).unwrap()
}

#[test]
fn dephasing_example() {
    let r = scenario_dephasing_qubit(1.0, 0.1, 2.0, &plus()).unwrap();
    assert!((r.computed.get(0, 0) - 16.0 * (-0.4f64).exp()).abs() < 1e-8);
    assert!(r.deviation < 1e-8, "{}", r.deviation);
    assert!(r.computed.get(0, 1).abs() < 1e-10);
}

#[test]
fn dephasing_limits() {
    let r = scenario_dephasing_qubit(0.3, 0.2, 0.0, &plus()).unwrap();
    assert!(r.computed.matrix.max_abs() < 1e-12);
    let pure = scenario_dephasing_qubit(0.3, 0.0, 1.5, &plus()).unwrap();
    assert!((pure.computed.get(0, 0) - 4.0 * 1.5 * 1.5).abs() < 1e-8);
    assert!(pure.has_flag("gamma_singular"));
    assert!(pure.closed_form.get(1, 1).is_infinite());
    let z = DensityMatrix::from_pure(&[cr(1.0), cr(0.0)]).unwrap();
    let deg = scenario_dephasing_qubit(0.3, 0.1, 1.0, &z).unwrap();
    assert!(deg.has_flag("degenerate_probe"));
    assert!(deg.computed.matrix.max_abs() < 1e-12);
    assert!(scenario_dephasing_qubit(0.3, -0.1, 1.0, &z).is_err());
}

#[test]
fn dephasing_mixed_probe_grid() {
    let rho0 = DensityMatrix::new(crate::numerics::CMatrix::from_rows(&[
        vec![cr(0.6), c(0.2, 0.1)],
        vec![c(0.2, -0.1), cr(0.4)],
    ]))
    .unwrap();
    for g in [0.05, 0.3, 1.0] {
        for t in [0.5, 1.0, 3.0] {
            let r = scenario_dephasing_qubit(0.7, g, t, &rho0).unwrap();
            assert!(r.deviation < 1e-8, "γ={g} t={t} {}", r.deviation);
        }
    }
}

#[test]
fn spin_field_maxima_and_random_probes() {
    let (b, th, t): (f64, f64, f64) = (0.8, 0.4, 1.3);
    // r orthogonal to both n0 and n1
    let bt = b * t;
    let n0 = [th.cos(), 0.0, th.sin()];
    let n1 = [bt.cos() * th.sin(), bt.sin(), -bt.cos() * th.cos()];
    let r = [
        n0[1] * n1[2] - n0[2] * n1[1],
        n0[2] * n1[0] - n0[0] * n1[2],
        n0[0] * n1[1] - n0[1] * n1[0],
    ];
    let res = scenario_spin_field(b, th, t, r).unwrap();
    assert!(res.deviation < 1e-9, "{}", res.deviation);
    assert!((res.computed.get(0, 0) - 4.0 * t * t).abs() < 1e-9);
    assert!((res.computed.get(1, 1) - 4.0 * bt.sin().powi(2)).abs() < 1e-9);

    let vanish = scenario_spin_field(b, th, PI / b, r).unwrap();
    assert!(vanish.computed.get(1, 1).abs() < 1e-12);

    let mut g = rng(3);
    for _ in 0..20 {
        let v: [f64; 3] = [g.random_range(-0.57..0.57), g.random_range(-0.57..0.57), g.random_range(-0.57..0.57)];
        let res = scenario_spin_field(g.random_range(0.1..2.0), g.random_range(-1.5..1.5), g.random_range(0.1..3.0), v)
            .unwrap();
        assert!(res.deviation < 1e-7, "{}", res.deviation);
    }
    assert!(scenario_spin_field(1.0, 0.0, 1.0, [1.0, 1.0, 0.0]).is_err());
}

#[test]
fn ancilla_closed_form() {
    let r = scenario_two_qubit_ancilla(0.9, 0.3, 1.1, 1.7).unwrap();
    assert!(r.deviation < 1e-7, "{}", r.deviation);
    let r = scenario_two_qubit_ancilla(0.9, FRAC_PI_2, 1.1, 1.7).unwrap();
    assert!(r.computed.get(2, 2).abs() < 1e-10);
    let (b, t) = (1.3, PI / 1.3);
    let r = scenario_two_qubit_ancilla(b, 0.2, 0.5, t).unwrap();
    assert!(r.computed.get(1, 1).abs() < 1e-10 && r.computed.get(2, 2).abs() < 1e-10);
    assert!((r.computed.get(0, 0) - 4.0 * t * t).abs() < 1e-9);
}

#[test]
fn controlled_closed_form_and_limit() {
    for n in [1, 4, 8] {
        let r = scenario_controlled_field(0.9, 0.3, 1.1, 0.2, n).unwrap();
        assert!(r.deviation < 1e-6, "N={n}: {}", r.deviation);
    }
    let single = scenario_controlled_field(0.9, 0.3, 1.1, 0.2, 1).unwrap();
    let plain = scenario_two_qubit_ancilla(0.9, 0.3, 1.1, 0.2).unwrap();
    assert!(single.computed.max_abs_diff(&plain.computed) < 1e-10);

    let t = 1.2;
    let residuals: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&n| {
            scenario_controlled_field(0.9, 0.3, 1.1, t / n as f64, n)
                .unwrap()
                .get_extra("limit_deviation")
                .unwrap()
        })
        .collect();
    for w in residuals.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
    assert!(scenario_controlled_field(0.9, 0.3, 1.1, 0.2, 0).is_err());
}

fn squeezed(r: f64) -> Vec<C64> {
    let cut = crate::fock::adaptive_cutoff(squeezed_population(r), 1e-14).unwrap();
    squeezed_vacuum(r, cut)
}

#[test]
fn mzi_vacuum_and_single_port() {
    let alpha = C64::from_polar(1.4, 0.3);
    let r = scenario_mzi_double_phase(alpha, &[cr(1.0)]).unwrap();
    let a2 = alpha.norm_sqr();
    assert!((r.computed.get(0, 0) - a2).abs() < 1e-9);
    assert!((r.computed.get(1, 1) - a2).abs() < 1e-9);
    assert!(r.deviation < 1e-9);

    let chi = squeezed(0.4);
    let r = scenario_mzi_double_phase(cr(0.0), &chi).unwrap();
    let n = 0.4f64.sinh().powi(2);
    let var = 2.0 * n * (n + 1.0);
    assert!((r.computed.get(0, 0) - var).abs() < 1e-8);
}

#[test]
fn mzi_moment_formulas() {
    let r = scenario_mzi_double_phase(c(1.1, 0.4), &squeezed(0.5)).unwrap();
    assert!(r.deviation < 1e-6, "{}", r.deviation);
    // coherent second port exercises the cross entry
    let beta = C64::from_polar(0.8, 1.0);
    let cut = crate::fock::adaptive_cutoff(crate::fock::coherent_population(beta), 1e-14).unwrap();
    let r = scenario_mzi_double_phase(c(0.9, -0.2), &crate::fock::coherent(beta, cut)).unwrap();
    assert!(r.computed.get(0, 1).abs() > 1e-2);
    assert!(r.deviation < 1e-8, "{}", r.deviation);
    assert!(scenario_mzi_double_phase(cr(1.0), &squeezed_vacuum(0.8, 6)).is_err());
}

#[test]
fn noon_closed_form_and_optimum() {
    let r = scenario_noon(2, 3, 0.5).unwrap();
    assert!((r.computed.get(0, 0) - 36.0 * (0.25 - 0.0625)).abs() < 1e-8);
    assert!((r.computed.get(0, 1) + 36.0 * 0.0625).abs() < 1e-8);
    assert!(r.deviation < 1e-8);
    let min = r.get_extra("min_trace_inverse").unwrap();
    assert!((min - (1.0 + 2f64.sqrt()).powi(2) * 2.0 / 36.0).abs() < 1e-12);
    assert!((r.get_extra("min_trace_inverse_numeric").unwrap() - min).abs() < 1e-8);

    let one = scenario_noon(1, 2, 0.6).unwrap();
    assert!((one.computed.get(0, 0) - 16.0 * 0.36 * 0.64).abs() < 1e-10);
    assert!(scenario_noon(2, 2, 0.9).is_err());
}

#[test]
fn trace_inverse_curves_are_convex() {
    for d in 1..=4 {
        let top = 1.0 / d as f64;
        let xs: Vec<f64> = (1..40).map(|k| top * k as f64 / 40.0).collect();
        let noon: Vec<f64> = xs.iter().map(|s| noon_trace_inverse(d, 2, s.sqrt())).collect();
        let ecs: Vec<f64> = xs.iter().map(|s| ecs_trace_inverse(d, cr(2.0), s.sqrt())).collect();
        for v in [noon, ecs] {
            for w in v.windows(3) {
                assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-8);
            }
        }
    }
}

#[test]
fn ecs_exact_overlaps() {
    let (d, alpha) = (2, cr(1.0));
    let c1 = 1.0 / (2.0 + 2f64.sqrt()).sqrt();
    let r = scenario_ecs(d, alpha, c1).unwrap();
    assert!(r.deviation < 1e-5, "{}", r.deviation);
    assert!(r.get_extra("optimum_valid").unwrap() == 0.0);
    let zero = scenario_ecs(3, cr(1.2), 0.0).unwrap();
    assert!(zero.computed.matrix.max_abs() < 1e-12);

    let big = scenario_ecs(2, cr(4.5), 0.4).unwrap();
    assert!(big.get_extra("nominal_deviation").unwrap() < 1e-6);
}

#[test]
fn ecs_optimum_beats_noon() {
    for d in [2, 3] {
        let alpha = cr(2.0);
        let r0 = scenario_ecs(d, alpha, 0.3).unwrap();
        let target = r0.get_extra("optimal_effective_c1").unwrap();
        let nominal = ecs_nominal_for_effective(d, alpha, target).unwrap();
        let r = scenario_ecs(d, alpha, nominal).unwrap();
        assert!((r.get_extra("effective_c1").unwrap() - target).abs() < 1e-12);
        let min = r.get_extra("min_trace_inverse").unwrap();
        assert!((r.trace_inverse - min).abs() < 1e-6, "{} vs {min}", r.trace_inverse);
        assert!(min < noon_trace_inverse(d, 4, 1.0 / (d as f64 + (d as f64).sqrt()).sqrt()));
    }
    assert!(ecs_nominal_for_effective(2, cr(1.0), 0.9).is_err());
}
