//! Ready-made parameterized families used by scenarios, tests and the CLI.

use crate::error::{Error, Result};
use crate::numerics::{c, cr, hermitian_eig, matrix_exp, pauli, CMatrix, C64};
use crate::states::{DensityMatrix, ParamFamily, PureFamily};

/// Dephasing qubit with parameters (B, γ, t): H = Bσz and dephasing at rate γ,
/// ρ₀₁(t) = ρ₀₁(0)·e^{−2iBt−γt}.
pub fn dephasing_qubit(rho0: &DensityMatrix) -> Result<ParamFamily> {
    if rho0.dim() != 2 {
        return Err(Error::domain("dephasing qubit needs a 2x2 initial state"));
    }
    let m = rho0.matrix().clone();
    let (r00, r11, r01) = (m[(0, 0)], m[(1, 1)], m[(0, 1)]);
    let coherence = move |x: &[f64]| r01 * C64::from_polar((-x[1] * x[2]).exp(), -2.0 * x[0] * x[2]);
    let build = move |off: C64, diag: bool| {
        let (d0, d1) = if diag { (r00, r11) } else { (cr(0.), cr(0.)) };
        CMatrix::from_rows(&[vec![d0, off], vec![off.conj(), d1]])
    };
    Ok(ParamFamily::new(3, move |x| {
        if x[1] < 0.0 || x[2] < 0.0 {
            return Err(Error::domain("dephasing qubit needs γ ≥ 0 and t ≥ 0"));
        }
        Ok(DensityMatrix::new_trusted(build(coherence(x), true)))
    })
    .with_analytic(move |x| {
        let (b, g, t) = (x[0], x[1], x[2]);
        let z = coherence(x);
        Ok(vec![
            build(z * c(0.0, -2.0 * t), false),
            build(z * (-t), false),
            build(z * c(-g, -2.0 * b), false),
        ])
    }))
}

/// cos θ|0⟩ + sin θ e^{iφ}|1⟩ with parameters (θ, φ).
pub fn qubit_theta_phi() -> PureFamily {
    PureFamily::new(2, |x| Ok(vec![cr(x[0].cos()), C64::from_polar(x[0].sin(), x[1])])).with_analytic(
        |x| {
            let (t, p) = (x[0], x[1]);
            Ok(vec![
                vec![cr(-t.sin()), C64::from_polar(t.cos(), p)],
                vec![cr(0.0), C64::from_polar(t.sin(), p) * c(0.0, 1.0)],
            ])
        },
    )
}

/// e^{−H/T}/Z
pub fn thermal_state(h: &CMatrix, temperature: f64) -> Result<DensityMatrix> {
    if temperature <= 0.0 {
        return Err(Error::domain(format!("temperature must be positive, got {temperature}")));
    }
    let e = hermitian_eig(h)?;
    let e0 = e.eigenvalues[0];
    let w: Vec<f64> = e
        .eigenvalues
        .iter()
        .map(|&l| (-(l - e0) / temperature).exp())
        .collect();
    let z: f64 = w.iter().sum();
    let rho = e.reconstruct_with(|l| (-(l - e0) / temperature).exp() / z);
    Ok(DensityMatrix::new_trusted(rho))
}

/// Thermal family in the temperature T with ∂_Tρ = (H − ⟨H⟩)ρ/T².
pub fn thermal(h: CMatrix) -> ParamFamily {
    let h2 = h.clone();
    ParamFamily::new(1, move |x| thermal_state(&h, x[0])).with_analytic(move |x| {
        let t = x[0];
        let rho = thermal_state(&h2, t)?;
        let mean = rho.expect(&h2).re;
        let mut shifted = h2.clone();
        for i in 0..shifted.rows() {
            shifted[(i, i)] -= cr(mean);
        }
        Ok(vec![(&shifted * rho.matrix()).hermitian_part().scale_real(1.0 / (t * t))])
    })
}

/// ρ(x) = U(x)ρ₀U(x)† with U(x) = exp(−i Σ x_a G_a); derivatives by central differences.
pub fn unitary_encoding(rho0: DensityMatrix, generators: Vec<CMatrix>) -> ParamFamily {
    let n = generators.len();
    ParamFamily::new(n, move |x| {
        let u = encoding_unitary(&generators, x)?;
        Ok(rho0.conjugate_by(&u))
    })
}

/// Collective spin operators J_i = Σ_k σ_i^(k)/2 on n qubits, in the order (J_x, J_y, J_z).
pub fn collective_spin(n_spins: usize) -> [CMatrix; 3] {
    let single = [pauli::x(), pauli::y(), pauli::z()];
    let id = pauli::id();
    let dim = 1usize << n_spins;
    single.map(|s| {
        let mut j = CMatrix::zeros(dim, dim);
        for k in 0..n_spins {
            let mut term = CMatrix::identity(1);
            for q in 0..n_spins {
                term = term.kron(if q == k { &s } else { &id });
            }
            j += &term;
        }
        j.scale_real(0.5)
    })
}

pub(crate) fn encoding_unitary(generators: &[CMatrix], x: &[f64]) -> Result<CMatrix> {
    let dim = generators
        .first()
        .map(|g| g.rows())
        .ok_or_else(|| Error::domain("no generators"))?;
    let mut h = CMatrix::zeros(dim, dim);
    for (g, &xa) in generators.iter().zip(x) {
        h.axpy(cr(xa), g);
    }
    matrix_exp(&h.scale(c(0.0, -1.0)))
}
