//! Optical multiphase probes in sparse Fock representation.

use crate::error::{Error, Result};
use crate::fock::{adaptive_cutoff, annihilation, coherent, coherent_population, MultimodeState};
use crate::numerics::{cr, inner, matrix_exp, normalized, CMatrix, C64};
use crate::qfim::{qfim_pure, QfimMatrix};

use super::ScenarioResult;

const TAIL_TOL: f64 = 1e-10;
const COHERENT_TAIL: f64 = 1e-14;

type OccupationFn = dyn Fn(&[u32]) -> f64;

/// QFIM of a pure multimode state under phases generated by `gens(occupation)`.
fn diagonal_qfim(state: &MultimodeState, gens: &[&OccupationFn]) -> Result<QfimMatrix> {
    let psi = normalized(&state.amplitudes());
    let scale = 1.0 / state.norm();
    let i = C64::new(0.0, 1.0);
    let dpsi: Vec<Vec<C64>> = gens
        .iter()
        .map(|g| state.diagonal(|occ| i * g(occ) * scale))
        .collect();
    Ok(qfim_pure(&psi, &dpsi)?.qfim)
}

/// exp(−iπJ_x/2) on the two-mode state, block by block in total photon number.
fn balanced_beam_splitter(input: &MultimodeState) -> Result<MultimodeState> {
    let max_n = input.iter().map(|(k, _)| k[0] + k[1]).max().unwrap_or(0);
    let mut out = MultimodeState::new(2);
    for n in 0..=max_n {
        let v: Vec<C64> = (0..=n).map(|k| input.amplitude(&[k, n - k])).collect();
        if v.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        let size = n as usize + 1;
        let mut jx = CMatrix::zeros(size, size);
        for k in 0..n as usize {
            let e = 0.5 * ((k + 1) as f64).sqrt() * ((n as usize - k) as f64).sqrt();
            jx[(k + 1, k)] = cr(e);
            jx[(k, k + 1)] = cr(e);
        }
        let b = matrix_exp(&jx.scale(C64::new(0.0, -std::f64::consts::FRAC_PI_2)))?;
        for (k, a) in b.mul_vec(&v).into_iter().enumerate() {
            if a.norm_sqr() > 0.0 {
                out.add(vec![k as u32, n - k as u32], a);
            }
        }
    }
    Ok(out)
}

/// Coherent light |α⟩ and `chi` on the two ports of a balanced interferometer,
/// parameters (φ_tot, φ_d) generated by (n_a + n_b)/2 and (n_a − n_b)/2.
pub fn scenario_mzi_double_phase(alpha: C64, chi: &[C64]) -> Result<ScenarioResult> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::domain("α must be finite"));
    }
    let norm2: f64 = chi.iter().map(|z| z.norm_sqr()).sum();
    if chi.is_empty() || (norm2 - 1.0).abs() > TAIL_TOL {
        return Err(Error::domain(format!(
            "chi has norm² {norm2:.12} in the truncated space; the tail must stay below {TAIL_TOL:e}"
        )));
    }
    let ca = adaptive_cutoff(coherent_population(alpha), COHERENT_TAIL)?;
    let input = MultimodeState::product(&coherent(alpha, ca), chi);
    let out = balanced_beam_splitter(&input)?;
    let computed = diagonal_qfim(
        &out,
        &[&|o: &[u32]| 0.5 * (o[0] + o[1]) as f64, &|o: &[u32]| 0.5 * (o[0] as f64 - o[1] as f64)],
    )?;

    let dim = chi.len() + 2;
    let mut v = chi.to_vec();
    v.resize(dim, cr(0.0));
    let b = annihilation(dim);
    let bd = b.adjoint();
    let nb = &bd * &b;
    let ev = |m: &CMatrix| inner(&v, &m.mul_vec(&v));
    let mb = ev(&b);
    let mbd = ev(&bd);
    let mn = ev(&nb).re;
    let var_n = ev(&(&nb * &nb)).re - mn * mn;
    let cov_b_bd = 0.5 * (2.0 * mn + 1.0) - mb.norm_sqr();
    let var_bd = ev(&(&bd * &bd)) - mbd * mbd;
    let m_bdbb = ev(&(&bd * &(&b * &b)));
    let a2 = alpha.norm_sqr();
    let ac = alpha.conj();
    let f_tt = a2 + var_n;
    let f_dd = 2.0 * a2 * cov_b_bd - 2.0 * (alpha * alpha * var_bd).re + mn;
    let f_td = 2.0 * ((ac * mb).im + (ac * (m_bdbb - mn * mb)).im);
    let closed = QfimMatrix::from_rows(&[vec![f_tt, f_td], vec![f_td, f_dd]]);
    Ok(ScenarioResult::new(
        "mzi",
        &[("alpha_re", alpha.re), ("alpha_im", alpha.im), ("chi_cutoff", chi.len() as f64)],
        &["phi_tot", "phi_d"],
        computed,
        closed,
    )?
    .extra("two_mode_terms", out.len() as f64))
}

fn check_weights(d: usize, c1: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::domain("need at least one phase (d ≥ 1)"));
    }
    let rest = 1.0 - d as f64 * c1 * c1;
    if !(c1 >= 0.0) || rest < -1e-12 {
        return Err(Error::domain(format!(
            "weights violate c0² + d·c1² = 1 (d = {d}, c1 = {c1})"
        )));
    }
    Ok(rest.max(0.0).sqrt())
}

fn phase_generators(d: usize) -> Vec<Box<OccupationFn>> {
    (1..=d)
        .map(|j| Box::new(move |o: &[u32]| o[j] as f64) as Box<OccupationFn>)
        .collect()
}

fn qfim_with_phases(state: &MultimodeState, d: usize) -> Result<QfimMatrix> {
    let gens = phase_generators(d);
    let refs: Vec<&OccupationFn> = gens.iter().map(|g| g.as_ref()).collect();
    diagonal_qfim(state, &refs)
}

/// Tr F⁻¹ for F = p(I − qJ), J the all-ones matrix.
fn trace_inverse_rank_one(d: usize, p: f64, q: f64) -> f64 {
    let dq = d as f64 * q;
    if p <= 0.0 || dq >= 1.0 {
        return f64::INFINITY;
    }
    d as f64 / p * (1.0 + q / (1.0 - dq))
}

/// Closed-form Tr F⁻¹ of the generalized N00N state with weight c1.
pub fn noon_trace_inverse(d: usize, n: u32, c1: f64) -> f64 {
    let s = c1 * c1;
    trace_inverse_rank_one(d, 4.0 * (n as f64).powi(2) * s, s)
}

/// c0|N,0,…,0⟩ + c1 Σ_j |0,…,N_j,…,0⟩ with phases on modes 1..d.
pub fn scenario_noon(d: usize, n: u32, c1: f64) -> Result<ScenarioResult> {
    let c0 = check_weights(d, c1)?;
    if n == 0 {
        return Err(Error::domain("need N ≥ 1 photons"));
    }
    let state = noon_state(d, n, c0, c1);
    let computed = qfim_with_phases(&state, d)?;
    let nn = 4.0 * (n as f64).powi(2);
    let s = c1 * c1;
    let closed = QfimMatrix::new(crate::numerics::RMatrix::from_fn(d, d, |i, j| {
        nn * (if i == j { s } else { 0.0 } - s * s)
    }));
    let dd = d as f64;
    let c_opt = 1.0 / (dd + dd.sqrt()).sqrt();
    let optimal = qfim_with_phases(&noon_state(d, n, (1.0 - dd * c_opt * c_opt).sqrt(), c_opt), d)?;
    let min_numeric = crate::qfim::crb_report(&optimal, 1)?.trace_inverse;
    Ok(ScenarioResult::new(
        "noon",
        &[("d", dd), ("N", n as f64), ("c1", c1)],
        &phase_labels(d),
        computed,
        closed,
    )?
    .extra("optimal_c1", c_opt)
    .extra("min_trace_inverse", (1.0 + dd.sqrt()).powi(2) * dd / nn)
    .extra("min_trace_inverse_numeric", min_numeric))
}

fn noon_state(d: usize, n: u32, c0: f64, c1: f64) -> MultimodeState {
    let mut state = MultimodeState::new(d + 1);
    for j in 0..=d {
        let mut occ = vec![0; d + 1];
        occ[j] = n;
        state.add(occ, cr(if j == 0 { c0 } else { c1 }));
    }
    state
}

fn phase_labels(d: usize) -> Vec<&'static str> {
    const LABELS: [&str; 8] = ["phi1", "phi2", "phi3", "phi4", "phi5", "phi6", "phi7", "phi8"];
    (0..d).map(|j| LABELS.get(j).copied().unwrap_or("phi")).collect()
}

/// Squared norm of c0|α,0,…⟩ + c1 Σ_j |0,…,α_j,…⟩ including the e^{−|α|²} overlaps.
pub fn ecs_normalization(d: usize, alpha: C64, c0: f64, c1: f64) -> f64 {
    let e = (-alpha.norm_sqr()).exp();
    let dd = d as f64;
    c0 * c0 + dd * c1 * c1 + 2.0 * e * (dd * c0 * c1 + 0.5 * dd * (dd - 1.0) * c1 * c1)
}

fn ecs_effective(d: usize, alpha: C64, c1: f64) -> Result<f64> {
    let c0 = check_weights(d, c1)?;
    Ok(c1 / ecs_normalization(d, alpha, c0, c1).sqrt())
}

/// Nominal c1 whose normalized weight equals `effective`.
pub fn ecs_nominal_for_effective(d: usize, alpha: C64, effective: f64) -> Result<f64> {
    let hi0 = 1.0 / (d.max(1) as f64).sqrt();
    let top = ecs_effective(d, alpha, hi0)?;
    if !(effective >= 0.0) || effective > top {
        return Err(Error::domain(format!(
            "normalized weight {effective} is not reachable (maximum {top} at d = {d}, |α| = {})",
            alpha.norm()
        )));
    }
    let (mut lo, mut hi) = (0.0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ecs_effective(d, alpha, mid)? < effective {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form Tr F⁻¹ of the entangled coherent state at normalized weight `effective`.
pub fn ecs_trace_inverse(d: usize, alpha: C64, effective: f64) -> f64 {
    let a2 = alpha.norm_sqr();
    let s = effective * effective;
    trace_inverse_rank_one(d, 4.0 * s * a2 * (1.0 + a2), s * a2 / (1.0 + a2))
}

fn ecs_closed(d: usize, alpha: C64, c: f64) -> QfimMatrix {
    let a2 = alpha.norm_sqr();
    let s = c * c;
    QfimMatrix::new(crate::numerics::RMatrix::from_fn(d, d, |i, j| {
        4.0 * s * a2 * (if i == j { 1.0 + a2 } else { 0.0 } - s * a2)
    }))
}

/// c0|α,0,…,0⟩ + c1 Σ_j |0,…,α_j,…,0⟩ with c0 = √(1 − d c1²), normalized with the exact overlaps.
///
/// The closed form is evaluated at the normalized weight c1/√𝒩; `nominal_deviation`
/// compares the same expression at the nominal c1.
pub fn scenario_ecs(d: usize, alpha: C64, c1: f64) -> Result<ScenarioResult> {
    let c0 = check_weights(d, c1)?;
    let cut = adaptive_cutoff(coherent_population(alpha), COHERENT_TAIL)?;
    let single = coherent(alpha, cut);
    let mut state = MultimodeState::new(d + 1);
    for j in 0..=d {
        state.add_single_mode(j, &single, cr(if j == 0 { c0 } else { c1 }));
    }
    let norm = ecs_normalization(d, alpha, c0, c1);
    if (state.norm().powi(2) - norm).abs() > TAIL_TOL * norm.max(1.0) {
        return Err(Error::domain(format!(
            "coherent truncation at {cut} levels misses {:e} of the norm",
            (state.norm().powi(2) - norm).abs()
        )));
    }
    let computed = qfim_with_phases(&state, d)?;
    let effective = c1 / norm.sqrt();
    let closed = ecs_closed(d, alpha, effective);
    let nominal_deviation = computed.max_abs_diff(&ecs_closed(d, alpha, c1));

    let a2 = alpha.norm_sqr();
    let dd = d as f64;
    let s_opt = (1.0 + a2) / (a2 * (dd + dd.sqrt()));
    Ok(ScenarioResult::new(
        "ecs",
        &[("d", dd), ("alpha_re", alpha.re), ("alpha_im", alpha.im), ("c1", c1)],
        &phase_labels(d),
        computed,
        closed,
    )?
    .extra("normalization", norm)
    .extra("effective_c1", effective)
    .extra("nominal_deviation", nominal_deviation)
    .extra("optimal_effective_c1", s_opt.sqrt())
    .extra("optimum_valid", if a2 >= dd.sqrt() { 1.0 } else { 0.0 })
    .extra("min_trace_inverse", (1.0 + dd.sqrt()).powi(2) * dd / (4.0 * (1.0 + a2).powi(2))))
}
