//! Worked estimation problems with known closed-form QFIMs.

mod magnetometry;
mod optics;

pub use magnetometry::{scenario_controlled_field, scenario_spin_field, scenario_two_qubit_ancilla, spin_field_direction};
pub use optics::{
    ecs_normalization, ecs_nominal_for_effective, ecs_trace_inverse, noon_trace_inverse, scenario_ecs, scenario_mzi_double_phase,
    scenario_noon,
};

use crate::error::{Error, Result};
use crate::families::dephasing_qubit;
use crate::numerics::RMatrix;
use crate::qfim::{crb_report, qfim_general, QfimMatrix};
use crate::states::{state_derivatives, DensityMatrix};

/// Computed QFIM next to its closed form.
#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub id: &'static str,
    pub inputs: Vec<(String, f64)>,
    /// Labels of the QFIM rows.
    pub params: Vec<String>,
    pub computed: QfimMatrix,
    pub closed_form: QfimMatrix,
    /// Largest |computed − closed form| over finite entries.
    pub deviation: f64,
    /// Tr F⁻¹ of the computed QFIM (pseudo-inverse when singular).
    pub trace_inverse: f64,
    pub extras: Vec<(String, f64)>,
    pub flags: Vec<String>,
}

impl ScenarioResult {
    fn new(
        id: &'static str,
        inputs: &[(&str, f64)],
        params: &[&str],
        computed: QfimMatrix,
        closed_form: QfimMatrix,
    ) -> Result<Self> {
        let deviation = computed
            .matrix
            .as_slice()
            .iter()
            .zip(closed_form.matrix.as_slice())
            .filter(|(_, c)| c.is_finite())
            .map(|(a, c)| (a - c).abs())
            .fold(0.0, f64::max);
        let crb = crb_report(&computed, 1)?;
        let mut flags = Vec::new();
        if crb.singular {
            flags.push("singular_qfim".to_string());
        }
        Ok(ScenarioResult {
            id,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            params: params.iter().map(|s| s.to_string()).collect(),
            computed,
            closed_form,
            deviation,
            trace_inverse: crb.trace_inverse,
            extras: Vec::new(),
            flags,
        })
    }

    fn extra(mut self, name: &str, value: f64) -> Self {
        self.extras.push((name.to_string(), value));
        self
    }

    fn flag(mut self, name: &str) -> Self {
        self.flags.push(name.to_string());
        self
    }

    pub fn get_extra(&self, name: &str) -> Option<f64> {
        self.extras.iter().find(|(k, _)| k == name).map(|e| e.1)
    }

    pub fn has_flag(&self, name: &str) -> bool {
        self.flags.iter().any(|f| f == name)
    }
}

pub(crate) fn diag(entries: &[f64]) -> QfimMatrix {
    QfimMatrix::new(RMatrix::from_diag(entries))
}

/// Dephasing qubit QFIM in (B, γ) against
/// F_BB = 16|ρ₀₁|²e^{−2γt}t², F_γγ = 4ρ₀₀ρ₁₁|ρ₀₁|²t²/(ρ₀₀ρ₁₁e^{2γt} − |ρ₀₁|²), F_Bγ = 0.
///
/// When the probe is pure and γ = 0 the γ direction is singular: its closed-form entry is
/// +∞, the computed one is the support-restricted value, and the flag `gamma_singular` is set.
pub fn scenario_dephasing_qubit(b: f64, gamma: f64, t: f64, rho0: &DensityMatrix) -> Result<ScenarioResult> {
    if !(t >= 0.0 && gamma >= 0.0) {
        return Err(Error::domain("dephasing scenario needs t ≥ 0 and γ ≥ 0"));
    }
    let fam = dephasing_qubit(rho0)?;
    let x = [b, gamma, t];
    let rho = fam.evaluate(&x)?;
    let d = state_derivatives(&fam, &x)?;
    let computed = qfim_general(&rho.spectral()?, &d[..2])?;

    let m = rho0.matrix();
    let (p00, p11, c2) = (m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)].norm_sqr());
    let fbb = 16.0 * c2 * (-2.0 * gamma * t).exp() * t * t;
    let num = 4.0 * p00 * p11 * c2 * t * t;
    let den = p00 * p11 * (2.0 * gamma * t).exp() - c2;
    let mut singular = false;
    let fgg = if num == 0.0 {
        0.0
    } else if den <= 1e-14 * p00 * p11 {
        singular = true;
        f64::INFINITY
    } else {
        num / den
    };
    let closed = QfimMatrix {
        matrix: RMatrix::from_rows(&[vec![fbb, 0.0], vec![0.0, fgg]]),
    };
    let mut res = ScenarioResult::new(
        "dephasing",
        &[("B", b), ("gamma", gamma), ("t", t)],
        &["B", "gamma"],
        computed,
        closed,
    )?;
    if c2 == 0.0 {
        res = res.flag("degenerate_probe");
    }
    if singular {
        res = res.flag("gamma_singular");
    }
    Ok(res)
}

#[cfg(test)]
mod tests;
