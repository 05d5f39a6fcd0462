//! Row-major Liouville superoperators and the augmented slice propagation.

use crate::error::{Error, Result};
use crate::numerics::{kron, matrix_exp, CMatrix, C64};

use super::ControlProblem;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Superoperator of −i[H, ·].
pub fn hamiltonian_superop(h: &CMatrix) -> CMatrix {
    let id = CMatrix::identity(h.rows());
    (&kron(h, &id) - &kron(&id, &h.transpose())).scale(-I)
}

/// Superoperator of γ(ΓρΓ† − ½{Γ†Γ, ρ}).
pub fn dissipator_superop(op: &CMatrix, rate: f64) -> CMatrix {
    let id = CMatrix::identity(op.rows());
    let gg = &op.adjoint() * op;
    let mut d = kron(op, &op.conj());
    d.axpy(C64::new(-0.5, 0.0), &kron(&gg, &id));
    d.axpy(C64::new(-0.5, 0.0), &kron(&id, &gg.transpose()));
    d.scale_real(rate)
}

/// Full Lindblad generator for Hamiltonian `h`.
pub fn liouvillian(h: &CMatrix, decay: &[(CMatrix, f64)]) -> CMatrix {
    let mut e = hamiltonian_superop(h);
    for (op, rate) in decay {
        e += &dissipator_superop(op, *rate);
    }
    e
}

/// Block matrix [[E,0,..],[G_1,E,..],[G_2,0,E],..] acting on (ρ, ∂_1ρ, ∂_2ρ, ..).
pub(crate) fn augmented(e: &CMatrix, g: &[CMatrix]) -> CMatrix {
    let n = e.rows();
    let blocks = 1 + g.len();
    let mut m = CMatrix::zeros(n * blocks, n * blocks);
    for b in 0..blocks {
        m.set_block(b * n, b * n, e);
    }
    for (a, ga) in g.iter().enumerate() {
        m.set_block((a + 1) * n, 0, ga);
    }
    m
}

/// Block-diagonal copy of `k` repeated `blocks` times.
pub(crate) fn block_diag(k: &CMatrix, blocks: usize) -> CMatrix {
    let n = k.rows();
    let mut m = CMatrix::zeros(n * blocks, n * blocks);
    for b in 0..blocks {
        m.set_block(b * n, b * n, k);
    }
    m
}

/// Returns (e^A v, L(A, E) v), L being the Fréchet derivative of exp at A along E.
///
/// Taylor series of the block generator [[A, E], [0, A]] applied to (0, v), with
/// enough substeps that each has unit 1-norm or less.
pub fn expm_frechet_action(a: &CMatrix, e: &CMatrix, v: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let steps = (a.norm1() + e.norm1()).ceil().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let mut top = vec![C64::new(0.0, 0.0); v.len()];
    let mut bot = v.to_vec();
    for _ in 0..steps {
        let mut sum_t = top.clone();
        let mut sum_b = bot.clone();
        let mut term_t = top.clone();
        let mut term_b = bot.clone();
        let mut small = 0;
        for k in 1..60 {
            let at = a.mul_vec(&term_t);
            let eb = e.mul_vec(&term_b);
            let ab = a.mul_vec(&term_b);
            let s = h / k as f64;
            term_t = at.iter().zip(&eb).map(|(x, y)| (x + y) * s).collect();
            term_b = ab.iter().map(|x| x * s).collect();
            for (acc, t) in sum_t.iter_mut().zip(&term_t) {
                *acc += t;
            }
            for (acc, t) in sum_b.iter_mut().zip(&term_b) {
                *acc += t;
            }
            let tn = norm(&term_t) + norm(&term_b);
            let sn = norm(&sum_t) + norm(&sum_b);
            if tn <= 1e-17 * sn {
                small += 1;
                if small == 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        top = sum_t;
        bot = sum_b;
    }
    (bot, top)
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// States and slice propagators of one controlled evolution.
///
/// Liouville vectors are stacked as (vec ρ, vec ∂_1ρ, .., vec ∂_pρ).
#[derive(Clone, Debug)]
pub struct PropagationTrace {
    /// Augmented states at slice boundaries, `states[0]` being the probe.
    pub states: Vec<Vec<C64>>,
    /// exp(Δt Ẽ_j) in augmented form; the top-left block is exp(Δt E_j).
    pub propagators: Vec<CMatrix>,
    /// Augmented generators Δt Ẽ_j.
    pub generators: Vec<CMatrix>,
    pub dim: usize,
    pub n_params: usize,
}

impl PropagationTrace {
    pub fn slices(&self) -> usize {
        self.propagators.len()
    }

    fn block(&self, v: &[C64], b: usize) -> CMatrix {
        let n2 = self.dim * self.dim;
        CMatrix::unvectorize(&v[b * n2..(b + 1) * n2], self.dim, self.dim)
    }

    /// ρ after `slice` slices.
    pub fn state(&self, slice: usize) -> CMatrix {
        self.block(&self.states[slice], 0)
    }

    /// ∂_aρ after `slice` slices.
    pub fn derivative(&self, slice: usize, a: usize) -> CMatrix {
        self.block(&self.states[slice], a + 1)
    }

    pub fn final_state(&self) -> CMatrix {
        self.state(self.slices())
    }

    pub fn final_derivatives(&self) -> Vec<CMatrix> {
        (0..self.n_params).map(|a| self.derivative(self.slices(), a)).collect()
    }

    /// exp(Δt E_j) without the derivative blocks.
    pub fn slice_superoperator(&self, j: usize) -> CMatrix {
        let n2 = self.dim * self.dim;
        self.propagators[j].block(0, 0, n2, n2)
    }
}

/// Propagates the probe and its parameter derivatives through every slice.
pub fn propagate(problem: &ControlProblem, x: &[f64]) -> Result<PropagationTrace> {
    problem.validate(x)?;
    let n = problem.dim();
    let p = problem.n_params();
    let h0 = (problem.h0)(x);
    let g: Vec<CMatrix> = (problem.dh0)(x)
        .iter()
        .map(|d| hamiltonian_superop(d).scale_real(problem.dt))
        .collect();
    let decay: Vec<(CMatrix, f64)> = problem.decay.iter().map(|l| (l.op.clone(), l.rate)).collect();
    let mut state = problem.probe.matrix().vectorize();
    state.resize((1 + p) * n * n, C64::new(0.0, 0.0));
    let mut states = vec![state];
    let mut propagators = Vec::with_capacity(problem.slices());
    let mut generators = Vec::with_capacity(problem.slices());
    for j in 0..problem.slices() {
        let mut h = h0.clone();
        for (k, hk) in problem.controls.iter().enumerate() {
            h.axpy(C64::new(problem.amplitudes[k][j], 0.0), hk);
        }
        let e = liouvillian(&h, &decay).scale_real(problem.dt);
        let gen = augmented(&e, &g);
        let prop = matrix_exp(&gen)?;
        let next = prop.mul_vec(states.last().unwrap());
        let tr: C64 = (0..n).map(|i| next[i * n + i]).sum();
        if (tr - 1.0).norm() > 1e-6 || next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::numerical(format!(
                "state trace drifted to {:.3e} at slice {}",
                tr.re,
                j + 1
            )));
        }
        states.push(next);
        propagators.push(prop);
        generators.push(gen);
    }
    Ok(PropagationTrace {
        states,
        propagators,
        generators,
        dim: n,
        n_params: p,
    })
}
