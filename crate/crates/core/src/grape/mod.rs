//! Gradient ascent pulse engineering for Hamiltonian parameter estimation under Lindblad noise.
//!
//! Controls are piecewise constant over `m` slices of length Δt. Gradients are
//! obtained with one backward costate sweep over the augmented state (ρ, ∂_aρ).

mod gradient;
mod liouville;

pub use gradient::{grape_gradients, objective_value, GradientMethod, Objective};
pub use liouville::{
    dissipator_superop, expm_frechet_action, hamiltonian_superop, liouvillian, propagate, PropagationTrace,
};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::CMatrix;
use crate::states::DensityMatrix;

pub type HamiltonianFn = dyn Fn(&[f64]) -> CMatrix + Send + Sync;
pub type HamiltonianDerivFn = dyn Fn(&[f64]) -> Vec<CMatrix> + Send + Sync;

/// A Lindblad channel γ(ΓρΓ† − ½{Γ†Γ, ρ}).
#[derive(Clone, Debug)]
pub struct Lindblad {
    pub op: CMatrix,
    pub rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrapeSettings {
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop when the relative objective change falls below this.
    pub tolerance: f64,
    pub method: GradientMethod,
}

impl Default for GrapeSettings {
    fn default() -> Self {
        GrapeSettings {
            learning_rate: 0.01,
            max_iterations: 500,
            tolerance: 1e-8,
            method: GradientMethod::Exact,
        }
    }
}

/// Estimation of x in H_0(x) with controls Σ_k V_k(j) H_k and constant-rate decay.
#[derive(Clone)]
pub struct ControlProblem {
    n_params: usize,
    pub(crate) h0: Arc<HamiltonianFn>,
    pub(crate) dh0: Arc<HamiltonianDerivFn>,
    pub controls: Vec<CMatrix>,
    /// amplitudes[k][j] for control k on slice j.
    pub amplitudes: Vec<Vec<f64>>,
    pub dt: f64,
    slice_count: usize,
    pub decay: Vec<Lindblad>,
    pub probe: DensityMatrix,
    pub objective: Objective,
    pub settings: GrapeSettings,
}

impl fmt::Debug for ControlProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlProblem")
            .field("n_params", &self.n_params)
            .field("controls", &self.controls.len())
            .field("slices", &self.slices())
            .field("dt", &self.dt)
            .field("objective", &self.objective.name())
            .finish_non_exhaustive()
    }
}

impl ControlProblem {
    /// Problem with no controls or decay yet; the objective defaults to F_00.
    pub fn new(
        n_params: usize,
        h0: impl Fn(&[f64]) -> CMatrix + Send + Sync + 'static,
        dh0: impl Fn(&[f64]) -> Vec<CMatrix> + Send + Sync + 'static,
        probe: DensityMatrix,
        total_time: f64,
        slices: usize,
    ) -> Self {
        ControlProblem {
            n_params,
            h0: Arc::new(h0),
            dh0: Arc::new(dh0),
            controls: Vec::new(),
            amplitudes: Vec::new(),
            dt: if slices == 0 { 0.0 } else { total_time / slices as f64 },
            slice_count: slices,
            decay: Vec::new(),
            probe,
            objective: Objective::Qfi { param: 0 },
            settings: GrapeSettings::default(),
        }
    }

    /// Adds a control Hamiltonian with all amplitudes set to `initial`.
    pub fn with_control(mut self, h: CMatrix, initial: f64) -> Self {
        self.controls.push(h);
        self.amplitudes.push(vec![initial; self.slice_count]);
        self
    }

    pub fn with_decay(mut self, op: CMatrix, rate: f64) -> Self {
        self.decay.push(Lindblad { op, rate });
        self
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn with_settings(mut self, settings: GrapeSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn dim(&self) -> usize {
        self.probe.dim()
    }

    pub fn slices(&self) -> usize {
        self.slice_count
    }

    pub fn total_time(&self) -> f64 {
        self.dt * self.slice_count as f64
    }

    pub fn validate(&self, x: &[f64]) -> Result<()> {
        let n = self.dim();
        if x.len() != self.n_params {
            return Err(Error::domain(format!(
                "problem has {} parameters, got {}",
                self.n_params,
                x.len()
            )));
        }
        if self.slice_count == 0 || !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::domain("need at least one slice and Δt > 0"));
        }
        let herm = |m: &CMatrix, what: &str| {
            if m.shape() != (n, n) || !m.is_hermitian(1e-10) {
                Err(Error::domain(format!("{what} must be a Hermitian {n}x{n} matrix")))
            } else {
                Ok(())
            }
        };
        herm(&(self.h0)(x), "H0(x)")?;
        let dh = (self.dh0)(x);
        if dh.len() != self.n_params {
            return Err(Error::domain("need one ∂H0 per parameter"));
        }
        for d in &dh {
            herm(d, "∂H0")?;
        }
        for (k, h) in self.controls.iter().enumerate() {
            herm(h, &format!("control {k}"))?;
            if self.amplitudes[k].len() != self.slice_count {
                return Err(Error::domain(format!("control {k} needs {} amplitudes", self.slice_count)));
            }
            if self.amplitudes[k].iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("control {k} has non-finite amplitudes")));
            }
        }
        for l in &self.decay {
            if l.op.shape() != (n, n) || !(l.rate >= 0.0) {
                return Err(Error::domain("decay operators must be square with rate ≥ 0"));
            }
        }
        self.objective.validate(n, self.n_params)
    }
}

/// Per-iteration record of a GRAPE run.
#[derive(Clone, Debug, PartialEq)]
pub struct GrapeIteration {
    pub iteration: usize,
    pub objective: f64,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug)]
pub struct GrapeResult {
    pub history: Vec<GrapeIteration>,
    pub best_objective: f64,
    pub best_iteration: usize,
    pub best_controls: Vec<Vec<f64>>,
    /// Information matrix at the best controls.
    pub best_matrix: crate::numerics::RMatrix,
    pub final_controls: Vec<Vec<f64>>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Simultaneous gradient ascent V ← V + ε∇ with best-seen tracking.
pub fn grape_run(problem: &ControlProblem, x: &[f64]) -> Result<GrapeResult> {
    let mut warnings = Vec::new();
    if matches!(problem.objective, Objective::F0Qfim) {
        warnings.push(
            "f0_qfim: Tr(F⁻¹) is not always achievable by a single measurement, so this objective may overstate precision"
                .to_string(),
        );
    }
    let s = problem.settings;
    let mut current = problem.clone();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Vec<Vec<f64>>, crate::numerics::RMatrix)> = None;
    let mut converged = false;
    let mut previous: Option<f64> = None;
    for it in 0..s.max_iterations.max(1) {
        let wrap = |e: Error| match e {
            Error::Numerical(m) => Error::numerical(format!("iteration {it}: {m}")),
            other => other,
        };
        let trace = propagate(&current, x).map_err(wrap)?;
        let eval = gradient::evaluate(&current.objective, &trace).map_err(wrap)?;
        let grad = gradient::gradients_from(&current, x, &trace, &eval, s.method).map_err(wrap)?;
        let gnorm = grad.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
        if !gnorm.is_finite() {
            return Err(Error::numerical(format!("iteration {it}: gradient is not finite")));
        }
        history.push(GrapeIteration {
            iteration: it,
            objective: eval.value,
            gradient_norm: gnorm,
        });
        if best.as_ref().map_or(true, |b| eval.value > b.0) {
            best = Some((eval.value, it, current.amplitudes.clone(), eval.matrix.clone()));
        }
        if let Some(prev) = previous {
            if (eval.value - prev).abs() <= s.tolerance * prev.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        previous = Some(eval.value);
        for (amp, g) in current.amplitudes.iter_mut().zip(&grad) {
            for (v, d) in amp.iter_mut().zip(g) {
                *v += s.learning_rate * d;
            }
        }
    }
    let (best_objective, best_iteration, best_controls, best_matrix) = best.expect("at least one iteration");
    Ok(GrapeResult {
        history,
        best_objective,
        best_iteration,
        best_controls,
        best_matrix,
        final_controls: current.amplitudes,
        converged,
        warnings,
    })
}
