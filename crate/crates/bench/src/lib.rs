//! Benchmark fixtures.

use qmetro::grape::ControlProblem;
use qmetro::numerics::pauli;
use qmetro::random::{random_density_matrix_with, random_hermitian, rng};
use qmetro::{CMatrix, DensityMatrix, Result};

/// Random full-rank state of dimension `d` with `params` Hermitian, traceless derivatives.
pub fn mixed_fixture(d: usize, params: usize, seed: u64) -> Result<(DensityMatrix, Vec<CMatrix>)> {
    let mut r = rng(seed);
    let rho = random_density_matrix_with(&mut r, d, d)?;
    let drho = (0..params)
        .map(|_| {
            let h = random_hermitian(&mut r, d);
            let shift = CMatrix::identity(d).scale(h.trace() / d as f64);
            &h - &shift
        })
        .collect();
    Ok((rho, drho))
}

/// Dephasing qubit sensing B with σx and σy controls over `slices` slices.
pub fn dephasing_control(slices: usize) -> Result<ControlProblem> {
    let plus = DensityMatrix::new((&pauli::id() + &pauli::x()).scale_real(0.5))?;
    let mut p = ControlProblem::new(1, |x| pauli::z().scale_real(x[0]), |_| vec![pauli::z()], plus, 2.0, slices)
        .with_decay(pauli::z(), 0.05);
    for (k, h) in [pauli::x(), pauli::y()].into_iter().enumerate() {
        p = p.with_control(h, 0.0);
        for (j, a) in p.amplitudes[k].iter_mut().enumerate() {
            *a = 0.3 * ((j + 1) as f64 * (k + 2) as f64).sin();
        }
    }
    Ok(p)
}
