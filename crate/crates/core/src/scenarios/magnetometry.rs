//! Qubit magnetometry: single spin, spin plus ancilla, and control-enhanced sequences.

use crate::error::{Error, Result};
use crate::numerics::{cr, kron, pauli, CMatrix, C64};
use crate::qfim::{qfim_pure, QfimMatrix};
use crate::states::DensityMatrix;
use crate::unitary::{generator_h, qfim_unitary, UnitaryFamily};

use super::{diag, ScenarioResult};

/// Field direction (cosθcosφ, cosθsinφ, sinθ).
pub fn spin_field_direction(theta: f64, phi: f64) -> [f64; 3] {
    [theta.cos() * phi.cos(), theta.cos() * phi.sin(), theta.sin()]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// H = −B n·σ on one qubit with n = (cosθcosφ, cosθsinφ, sinθ), parameters (B, θ, φ).
fn field_family(t: f64) -> UnitaryFamily {
    UnitaryFamily::hamiltonian(
        3,
        t,
        |x| Ok(pauli::dot(spin_field_direction(x[1], x[2])).scale_real(-x[0])),
        |x| {
            let (b, th, ph) = (x[0], x[1], x[2]);
            let n = spin_field_direction(th, ph);
            let dth = [-th.sin() * ph.cos(), -th.sin() * ph.sin(), th.cos()];
            let dph = [-th.cos() * ph.sin(), th.cos() * ph.cos(), 0.0];
            Ok(vec![
                pauli::dot(n).scale_real(-1.0),
                pauli::dot(dth).scale_real(-b),
                pauli::dot(dph).scale_real(-b),
            ])
        },
    )
}

/// Single spin in H = −B(cosθ σx + sinθ σz) with probe (I + r·σ)/2, parameters (B, θ).
pub fn scenario_spin_field(b: f64, theta: f64, t: f64, r: [f64; 3]) -> Result<ScenarioResult> {
    let r2 = dot3(r, r);
    if r2 > 1.0 + 1e-12 || !r2.is_finite() {
        return Err(Error::domain(format!("Bloch vector has |r| = {} > 1", r2.sqrt())));
    }
    let fam = UnitaryFamily::hamiltonian(
        2,
        t,
        |x| Ok(pauli::dot([x[1].cos(), 0.0, x[1].sin()]).scale_real(-x[0])),
        |x| {
            Ok(vec![
                pauli::dot([x[1].cos(), 0.0, x[1].sin()]).scale_real(-1.0),
                pauli::dot([-x[1].sin(), 0.0, x[1].cos()]).scale_real(-x[0]),
            ])
        },
    );
    let rho0 = DensityMatrix::new((&pauli::id() + &pauli::dot(r)).scale_real(0.5))?;
    let gens = generator_h(&fam, &[b, theta])?;
    let computed = qfim_unitary(&rho0.spectral()?, &gens)?;

    let bt = b * t;
    let n0 = [theta.cos(), 0.0, theta.sin()];
    let n1 = [bt.cos() * theta.sin(), bt.sin(), -bt.cos() * theta.cos()];
    let (r0, r1) = (dot3(n0, r), dot3(n1, r));
    let s = bt.sin();
    let closed = QfimMatrix::from_rows(&[
        vec![4.0 * t * t * (r2 - r0 * r0), 4.0 * t * s * r0 * r1],
        vec![4.0 * t * s * r0 * r1, 4.0 * s * s * (r2 - r1 * r1)],
    ]);
    Ok(ScenarioResult::new(
        "spin-field",
        &[("B", b), ("theta", theta), ("t", t), ("rx", r[0]), ("ry", r[1]), ("rz", r[2])],
        &["B", "theta"],
        computed,
        closed,
    )?
    .extra("n1_x", n1[0])
    .extra("n1_y", n1[1])
    .extra("n1_z", n1[2]))
}

fn bell() -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![cr(s), cr(0.0), cr(0.0), cr(s)]
}

/// (U ⊗ I)|Bell⟩ and its parameter derivatives for ∂_aU = iUH_a.
fn ancilla_derivatives(u: &CMatrix, du: &[CMatrix]) -> (Vec<C64>, Vec<Vec<C64>>) {
    let id = pauli::id();
    let probe = bell();
    let psi = kron(u, &id).mul_vec(&probe);
    let dpsi = du.iter().map(|d| kron(d, &id).mul_vec(&probe)).collect();
    (psi, dpsi)
}

/// Spin entangled with an ancilla, the field acting on the spin only, parameters (B, θ, φ).
pub fn scenario_two_qubit_ancilla(b: f64, theta: f64, phi: f64, t: f64) -> Result<ScenarioResult> {
    let x = [b, theta, phi];
    let gens = generator_h(&field_family(t), &x)?;
    let i = C64::new(0.0, 1.0);
    let du: Vec<CMatrix> = gens.h_ops.iter().map(|h| (&gens.unitary * h).scale(i)).collect();
    let (psi, dpsi) = ancilla_derivatives(&gens.unitary, &du);
    let computed = qfim_pure(&psi, &dpsi)?.qfim;
    let s2 = (b * t).sin().powi(2);
    let closed = diag(&[4.0 * t * t, 4.0 * s2, 4.0 * s2 * theta.cos().powi(2)]);
    ScenarioResult::new(
        "ancilla",
        &[("B", b), ("theta", theta), ("phi", phi), ("t", t)],
        &["B", "theta", "phi"],
        computed,
        closed,
    )
}

/// N repetitions of U(x, δt) each followed by the inverse evolution at the true value.
///
/// The extra `limit_deviation` compares against the δt → 0 form 4diag(t², B²t², B²t²cos²θ)
/// with t = Nδt.
pub fn scenario_controlled_field(b: f64, theta: f64, phi: f64, dt: f64, n: usize) -> Result<ScenarioResult> {
    if n == 0 {
        return Err(Error::domain("controlled scenario needs at least one repetition"));
    }
    let x = [b, theta, phi];
    let gens = generator_h(&field_family(dt), &x)?;
    let u = &gens.unitary;
    let i = C64::new(0.0, 1.0);
    let v = u.adjoint();
    let step = &v * u;
    let mut powers = vec![CMatrix::identity(2)];
    for k in 1..n {
        powers.push(&step * &powers[k - 1]);
    }
    let w = &step * &powers[n - 1];
    let du: Vec<CMatrix> = gens
        .h_ops
        .iter()
        .map(|h| {
            let inner = &v * &(u * h).scale(i);
            let mut acc = CMatrix::zeros(2, 2);
            for k in 0..n {
                acc += &(&(&powers[n - 1 - k] * &inner) * &powers[k]);
            }
            acc
        })
        .collect();
    let (psi, dpsi) = ancilla_derivatives(&w, &du);
    let computed = qfim_pure(&psi, &dpsi)?.qfim;

    let nn = (n * n) as f64;
    let s2 = (b * dt).sin().powi(2);
    let closed = diag(&[4.0 * nn * dt * dt, 4.0 * nn * s2, 4.0 * nn * s2 * theta.cos().powi(2)]);
    let t = n as f64 * dt;
    let bt2 = (b * t).powi(2);
    let limit = diag(&[4.0 * t * t, 4.0 * bt2, 4.0 * bt2 * theta.cos().powi(2)]);
    let limit_deviation = computed.max_abs_diff(&limit);
    Ok(ScenarioResult::new(
        "controlled",
        &[("B", b), ("theta", theta), ("phi", phi), ("dt", dt), ("N", n as f64)],
        &["B", "theta", "phi"],
        computed,
        closed,
    )?
    .extra("limit_deviation", limit_deviation))
}
