//! Objectives built from the QFIM or CFIM at the final time and their control gradients.

use crate::error::{Error, Result};
use crate::measurement::{cfim_state, Povm, ZERO_PROBABILITY};
use crate::numerics::{CMatrix, RMatrix, C64};
use crate::qfim::{qfim_general, sld_compute, SldMethod};
use crate::states::DensityMatrix;

use super::liouville::{block_diag, hamiltonian_superop, expm_frechet_action, PropagationTrace};
use super::ControlProblem;

/// Figure of merit maximized by GRAPE.
#[derive(Clone, Debug)]
pub enum Objective {
    /// F_aa
    Qfi { param: usize },
    /// I_aa for a fixed measurement.
    Cfi { param: usize, povm: Povm },
    /// det F / Tr F (two parameters).
    FEff,
    /// det I / Tr I (two parameters).
    IEff { povm: Povm },
    /// (Σ_a 1/I_aa)⁻¹
    F0Cfim { povm: Povm },
    /// (Σ_a 1/F_aa)⁻¹
    F0Qfim,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Qfi { .. } => "qfi_aa",
            Objective::Cfi { .. } => "cfi_aa",
            Objective::FEff => "f_eff",
            Objective::IEff { .. } => "i_eff",
            Objective::F0Cfim { .. } => "f0_cfim",
            Objective::F0Qfim => "f0_qfim",
        }
    }

    fn povm(&self) -> Option<&Povm> {
        match self {
            Objective::Cfi { povm, .. } | Objective::IEff { povm } | Objective::F0Cfim { povm } => Some(povm),
            _ => None,
        }
    }

    pub(crate) fn validate(&self, dim: usize, n_params: usize) -> Result<()> {
        if let Some(p) = self.povm() {
            if p.dim() != dim {
                return Err(Error::domain(format!(
                    "objective POVM acts on dimension {}, system has {dim}",
                    p.dim()
                )));
            }
        }
        match self {
            Objective::Qfi { param } | Objective::Cfi { param, .. } if *param >= n_params => Err(
                Error::domain(format!("objective parameter {param} out of range (n = {n_params})")),
            ),
            Objective::FEff | Objective::IEff { .. } if n_params != 2 => Err(Error::domain(format!(
                "{} needs exactly two parameters, got {n_params}",
                self.name()
            ))),
            _ => Ok(()),
        }
    }

    /// Objective value and weights w_ab with δobjective = Σ_ab w_ab δM_ab.
    fn value_and_weights(&self, m: &RMatrix) -> (f64, RMatrix) {
        let n = m.rows();
        let mut w = RMatrix::zeros(n, n);
        let value = match self {
            Objective::Qfi { param } | Objective::Cfi { param, .. } => {
                w[(*param, *param)] = 1.0;
                m[(*param, *param)]
            }
            Objective::FEff | Objective::IEff { .. } => {
                let (m00, m11, m01) = (m[(0, 0)], m[(1, 1)], m[(0, 1)]);
                let tr = m00 + m11;
                w[(0, 0)] = (m11 * m11 + m01 * m01) / (tr * tr);
                w[(1, 1)] = (m00 * m00 + m01 * m01) / (tr * tr);
                w[(0, 1)] = -m01 / tr;
                w[(1, 0)] = -m01 / tr;
                (m00 * m11 - m01 * m01) / tr
            }
            Objective::F0Cfim { .. } | Objective::F0Qfim => {
                let f0 = 1.0 / (0..n).map(|a| 1.0 / m[(a, a)]).sum::<f64>();
                for a in 0..n {
                    w[(a, a)] = (f0 / m[(a, a)]).powi(2);
                }
                f0
            }
        };
        (value, w)
    }
}

/// How control gradients are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GradientMethod {
    /// Exact derivatives of every slice exponential.
    #[default]
    Exact,
    /// Leading order in Δt: each control acts as Δt·H_k^× right after its slice.
    FirstOrder,
}

/// Objective value with the weight operators W_0 (on ρ) and W_a (on ∂_aρ).
pub(crate) struct Evaluation {
    pub value: f64,
    pub matrix: RMatrix,
    weights: Vec<CMatrix>,
}

pub(crate) fn evaluate(objective: &Objective, trace: &PropagationTrace) -> Result<Evaluation> {
    let rho = DensityMatrix::new_trusted(trace.final_state().hermitian_part());
    let drho: Vec<CMatrix> = trace.final_derivatives().iter().map(|d| d.hermitian_part()).collect();
    let p = drho.len();
    let n = rho.dim();
    let mut weights = vec![CMatrix::zeros(n, n); p + 1];
    let matrix;
    let value;
    if let Some(povm) = objective.povm() {
        let c = cfim_state(&rho, &drho, povm)?;
        matrix = c.cfim.matrix.clone();
        let (v, w) = objective.value_and_weights(&matrix);
        value = v;
        let dp: Vec<Vec<f64>> = drho
            .iter()
            .map(|d| povm.elements().iter().map(|e| d.trace_product(e).re).collect())
            .collect();
        for (y, e) in povm.elements().iter().enumerate() {
            let py = c.probabilities[y];
            if py < ZERO_PROBABILITY {
                continue;
            }
            for a in 0..p {
                for b in 0..p {
                    if w[(a, b)] == 0.0 {
                        continue;
                    }
                    weights[a + 1].axpy(C64::new(2.0 * w[(a, b)] * dp[b][y] / py, 0.0), e);
                    weights[0].axpy(C64::new(-w[(a, b)] * dp[a][y] * dp[b][y] / (py * py), 0.0), e);
                }
            }
        }
    } else {
        let spectral = rho.spectral()?;
        matrix = qfim_general(&spectral, &drho)?.matrix;
        let (v, w) = objective.value_and_weights(&matrix);
        value = v;
        let l = sld_compute(&spectral, &drho, SldMethod::Eigenbasis)?.operators;
        for a in 0..p {
            for b in 0..p {
                if w[(a, b)] == 0.0 {
                    continue;
                }
                weights[a + 1].axpy(C64::new(2.0 * w[(a, b)], 0.0), &l[b]);
                weights[0].axpy(C64::new(-0.5 * w[(a, b)], 0.0), &l[a].anticommutator(&l[b]));
            }
        }
    }
    if !value.is_finite() {
        return Err(Error::numerical(format!("{} objective is not finite", objective.name())));
    }
    Ok(Evaluation {
        value,
        matrix,
        weights,
    })
}

/// Objective value at the end of `trace`.
pub fn objective_value(objective: &Objective, trace: &PropagationTrace) -> Result<f64> {
    Ok(evaluate(objective, trace)?.value)
}

fn dot(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x * y).re).sum()
}

/// ∂(objective)/∂V[k][j] for every control k and slice j.
pub fn grape_gradients(
    problem: &ControlProblem,
    x: &[f64],
    trace: &PropagationTrace,
    method: GradientMethod,
) -> Result<Vec<Vec<f64>>> {
    let eval = evaluate(&problem.objective, trace)?;
    gradients_from(problem, x, trace, &eval, method)
}

pub(crate) fn gradients_from(
    problem: &ControlProblem,
    x: &[f64],
    trace: &PropagationTrace,
    eval: &Evaluation,
    method: GradientMethod,
) -> Result<Vec<Vec<f64>>> {
    problem.objective.validate(problem.dim(), problem.n_params())?;
    let m = trace.slices();
    if m != problem.slices() || trace.n_params != problem.n_params() || trace.dim != problem.dim() {
        return Err(Error::domain("trace does not belong to this problem"));
    }
    let blocks = 1 + trace.n_params;
    let c: Vec<C64> = eval.weights.iter().flat_map(|w| w.transpose().vectorize()).collect();
    let controls: Vec<CMatrix> = problem
        .controls
        .iter()
        .map(|h| block_diag(&hamiltonian_superop(h).scale_real(problem.dt), blocks))
        .collect();

    let (props, states) = match method {
        GradientMethod::Exact => (trace.propagators.clone(), trace.states.clone()),
        GradientMethod::FirstOrder => first_order_trace(problem, x, trace),
    };
    // costate after each slice: c^T times the propagators of later slices
    let mut lam = vec![c; m];
    for j in (0..m.saturating_sub(1)).rev() {
        lam[j] = props[j + 1].transpose().mul_vec(&lam[j + 1]);
    }
    let mut grad = vec![vec![0.0; m]; problem.controls.len()];
    for j in 0..m {
        for (k, ck) in controls.iter().enumerate() {
            let tangent = match method {
                GradientMethod::Exact => expm_frechet_action(&trace.generators[j], ck, &states[j]).1,
                GradientMethod::FirstOrder => ck.mul_vec(&states[j + 1]),
            };
            grad[k][j] = dot(&lam[j], &tangent);
        }
    }
    Ok(grad)
}

/// Augmented propagators with ∂_aP_j replaced by Δt G_a P_j, and the states they produce.
fn first_order_trace(
    problem: &ControlProblem,
    x: &[f64],
    trace: &PropagationTrace,
) -> (Vec<CMatrix>, Vec<Vec<C64>>) {
    let n2 = trace.dim * trace.dim;
    let g: Vec<CMatrix> = (problem.dh0)(x)
        .iter()
        .map(|d| hamiltonian_superop(d).scale_real(problem.dt))
        .collect();
    let mut props = Vec::with_capacity(trace.slices());
    let mut states = vec![trace.states[0].clone()];
    for j in 0..trace.slices() {
        let pj = trace.slice_superoperator(j);
        let mut aug = block_diag(&pj, g.len() + 1);
        for (a, ga) in g.iter().enumerate() {
            aug.set_block((a + 1) * n2, 0, &(ga * &pj));
        }
        states.push(aug.mul_vec(states.last().unwrap()));
        props.push(aug);
    }
    (props, states)
}
