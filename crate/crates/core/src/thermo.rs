//! Thermal-state QFI, the energy-basis spectral sum, QFI flow and non-Markovianity.

use crate::error::{Error, Result};
use crate::families::thermal_state;
use crate::numerics::{hermitian_eig, CMatrix, RMatrix, C64};
use crate::qfim::QfimMatrix;

/// Temperature QFI of e^{−H/T}/Z with its SLD.
#[derive(Clone, Debug)]
pub struct ThermalQfi {
    /// F_TT = (⟨H²⟩ − ⟨H⟩²)/T⁴
    pub fisher: f64,
    /// C_v = (⟨H²⟩ − ⟨H⟩²)/T²
    pub heat_capacity: f64,
    /// L_T = (H − ⟨H⟩)/T²
    pub sld: CMatrix,
}

pub fn thermal_qfi(h: &CMatrix, temperature: f64) -> Result<ThermalQfi> {
    let rho = thermal_state(h, temperature)?;
    let mean = rho.expect(h).re;
    let second = rho.expect(&(h * h)).re;
    let var = (second - mean * mean).max(0.0);
    let t2 = temperature * temperature;
    let mut sld = h.clone();
    for i in 0..sld.rows() {
        sld[(i, i)] -= C64::new(mean, 0.0);
    }
    Ok(ThermalQfi {
        fisher: var / (t2 * t2),
        heat_capacity: var / t2,
        sld: sld.scale_real(1.0 / t2),
    })
}

const COMMUTATION_TOL: f64 = 1e-10;

/// QFIM of e^{iΣx_aO_a} ρ_th e^{−iΣx_aO_a} at x = 0 from the energy spectrum:
/// F_ab = 2Σ_ij (p_i − p_j)²/(p_i + p_j)·Re(⟨E_i|O_a|E_j⟩⟨E_j|O_b|E_i⟩).
pub fn thermal_qfim_spectral_sum(h: &CMatrix, generators: &[CMatrix], temperature: f64) -> Result<QfimMatrix> {
    if temperature <= 0.0 {
        return Err(Error::domain(format!("temperature must be positive, got {temperature}")));
    }
    let n = h.rows();
    for (a, o) in generators.iter().enumerate() {
        if o.shape() != (n, n) || !o.is_hermitian(COMMUTATION_TOL) {
            return Err(Error::domain(format!("generator {a} must be Hermitian and match H")));
        }
        for (b, ob) in generators.iter().enumerate().skip(a + 1) {
            let c = o.commutator(ob).max_abs();
            if c > COMMUTATION_TOL * o.norm().max(ob.norm()).max(1.0) {
                return Err(Error::domain(format!("generators {a} and {b} do not commute ({c:e})")));
            }
        }
    }
    let e = hermitian_eig(h)?;
    let e0 = e.eigenvalues[0];
    let w: Vec<f64> = e.eigenvalues.iter().map(|&l| (-(l - e0) / temperature).exp()).collect();
    let z: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|v| v / z).collect();
    let os: Vec<CMatrix> = generators.iter().map(|o| e.to_eigenbasis(o)).collect();
    let k = generators.len();
    let mut f = RMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let den = p[i] + p[j];
                    if den > 0.0 {
                        s += 2.0 * (p[i] - p[j]).powi(2) / den * (os[a][(i, j)] * os[b][(j, i)]).re;
                    }
                }
            }
            f[(a, b)] = s;
            f[(b, a)] = s;
        }
    }
    Ok(QfimMatrix::new(f))
}

/// −Σ_j γ_j Tr(ρ[L, Γ_j]†[L, Γ_j]) for an SLD L and Lindblad operators Γ_j.
pub fn qfi_flow(rho: &CMatrix, sld: &CMatrix, lindblad_ops: &[CMatrix], rates: &[f64]) -> Result<f64> {
    if lindblad_ops.len() != rates.len() {
        return Err(Error::domain("one rate per Lindblad operator is required"));
    }
    let n = rho.rows();
    if sld.shape() != (n, n) || lindblad_ops.iter().any(|g| g.shape() != (n, n)) {
        return Err(Error::domain("operator dimensions do not match the state"));
    }
    let mut flow = 0.0;
    for (g, &gamma) in lindblad_ops.iter().zip(rates) {
        let c = sld.commutator(g);
        flow -= gamma * rho.trace_product(&(&c.adjoint() * &c)).re;
    }
    Ok(flow)
}

/// N = Σ_k max(λ_max(∂_tF̄(t_k)), 0)·Δt on a uniform grid; derivatives are central in the
/// interior and one-sided at the two ends.
pub fn non_markovianity(trajectory: &[RMatrix], dt: f64) -> Result<f64> {
    if trajectory.len() < 3 {
        return Err(Error::domain(format!(
            "non-Markovianity needs at least 3 time points, got {}",
            trajectory.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::domain("time step must be positive"));
    }
    let shape = trajectory[0].shape();
    if trajectory.iter().any(|m| m.shape() != shape || !m.is_square()) {
        return Err(Error::domain("trajectory matrices must share one square shape"));
    }
    let last = trajectory.len() - 1;
    let mut total = 0.0;
    for k in 0..=last {
        let d = match k {
            0 => (&trajectory[1] - &trajectory[0]).scale_real(1.0 / dt),
            k if k == last => (&trajectory[last] - &trajectory[last - 1]).scale_real(1.0 / dt),
            k => (&trajectory[k + 1] - &trajectory[k - 1]).scale_real(0.5 / dt),
        };
        let lmax = crate::numerics::symmetric_eig(&d.hermitian_part())?
            .eigenvalues
            .last()
            .copied()
            .unwrap_or(0.0);
        let weight = if k == 0 || k == last { 0.5 } else { 1.0 };
        total += weight * lmax.max(0.0) * dt;
    }
    Ok(total)
}
