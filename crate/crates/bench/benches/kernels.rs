use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qmetro::gaussian::{gaussian_qfim, squeezed_thermal_covariance, GaussianState};
use qmetro::grape::{grape_gradients, propagate, GradientMethod};
use qmetro::numerics::hermitian_eig;
use qmetro::numerics::matrix_exp;
use qmetro::qfim::{qfim_general, sld_compute};
use qmetro::random::{random_hermitian, rng};
use qmetro::{RMatrix, SldMethod};
use qmetro_bench::{dephasing_control, mixed_fixture};

fn linear_algebra(c: &mut Criterion) {
    let mut g = c.benchmark_group("linalg");
    for d in [4, 16, 64] {
        let h = random_hermitian(&mut rng(d as u64), d);
        g.bench_with_input(BenchmarkId::new("hermitian_eig", d), &h, |b, h| b.iter(|| hermitian_eig(black_box(h))));
        let a = h.scale(qmetro::C64::new(0.0, -0.5));
        g.bench_with_input(BenchmarkId::new("matrix_exp", d), &a, |b, a| b.iter(|| matrix_exp(black_box(a))));
    }
    g.finish();
}

fn qfim(c: &mut Criterion) {
    let mut g = c.benchmark_group("qfim");
    for d in [2, 8, 32] {
        let (rho, drho) = mixed_fixture(d, 3, 7).unwrap();
        let spectral = rho.spectral().unwrap();
        g.bench_with_input(BenchmarkId::new("general", d), &d, |b, _| {
            b.iter(|| qfim_general(black_box(&spectral), black_box(&drho)))
        });
        for (name, method) in [("sld_eigenbasis", SldMethod::Eigenbasis), ("sld_liouville", SldMethod::Liouville)] {
            if d <= 8 || name == "sld_eigenbasis" {
                g.bench_with_input(BenchmarkId::new(name, d), &d, |b, _| {
                    b.iter(|| sld_compute(black_box(&spectral), black_box(&drho), method))
                });
            }
        }
    }
    let state = GaussianState::new(vec![0.3, -0.2], squeezed_thermal_covariance(0.4, 0.5, 0.2)).unwrap();
    let dc = squeezed_thermal_covariance(0.1, 0.2, 0.7);
    g.bench_function("gaussian_single_mode", |b| {
        b.iter(|| gaussian_qfim(black_box(&state), &[vec![1.0, 0.0]], &[RMatrix::zeros(2, 2)]))
    });
    g.bench_function("gaussian_covariance", |b| {
        b.iter(|| gaussian_qfim(black_box(&state), &[vec![0.0, 0.0]], std::slice::from_ref(&dc)))
    });
    g.finish();
}

fn grape(c: &mut Criterion) {
    let mut g = c.benchmark_group("grape");
    for slices in [10, 40] {
        let problem = dephasing_control(slices).unwrap();
        let x = [1.0];
        g.bench_with_input(BenchmarkId::new("propagate", slices), &slices, |b, _| {
            b.iter(|| propagate(black_box(&problem), &x))
        });
        let trace = propagate(&problem, &x).unwrap();
        for (name, method) in [("gradient_exact", GradientMethod::Exact), ("gradient_first_order", GradientMethod::FirstOrder)] {
            g.bench_with_input(BenchmarkId::new(name, slices), &slices, |b, _| {
                b.iter(|| grape_gradients(black_box(&problem), &x, &trace, method))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, linear_algebra, qfim, grape);
criterion_main!(benches);
