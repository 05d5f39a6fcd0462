//! Generators of unitary parameterizations and the QFIM of unitary channels.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{matrix_exp, CMatrix, Matrix, RMatrix, C64};
use crate::qfim::QfimMatrix;
use crate::states::{DensityMatrix, FdConfig, FdScheme, ParamFamily, SpectralData};

type MatrixFn = dyn Fn(&[f64]) -> Result<CMatrix> + Send + Sync;
type MatrixListFn = dyn Fn(&[f64]) -> Result<Vec<CMatrix>> + Send + Sync;

const HERMITIAN_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-9;

/// Stopping rule for the nested-commutator generator series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesConfig {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            rel_tol: 1e-14,
            max_terms: 300,
        }
    }
}

#[derive(Clone)]
enum Form {
    Hamiltonian {
        h: Arc<MatrixFn>,
        dh: Arc<MatrixListFn>,
        time: f64,
    },
    Direct {
        u: Arc<MatrixFn>,
        fd: FdConfig,
    },
}

/// U(x) given either as exp(−itH(x)) with known ∂_aH, or directly.
#[derive(Clone)]
pub struct UnitaryFamily {
    n_params: usize,
    form: Form,
    series: SeriesConfig,
}

impl fmt::Debug for UnitaryFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let form = match &self.form {
            Form::Hamiltonian { time, .. } => format!("hamiltonian(t = {time})"),
            Form::Direct { fd, .. } => format!("direct({fd:?})"),
        };
        f.debug_struct("UnitaryFamily")
            .field("n_params", &self.n_params)
            .field("form", &form)
            .finish()
    }
}

impl UnitaryFamily {
    pub fn hamiltonian(
        n_params: usize,
        time: f64,
        h: impl Fn(&[f64]) -> Result<CMatrix> + Send + Sync + 'static,
        dh: impl Fn(&[f64]) -> Result<Vec<CMatrix>> + Send + Sync + 'static,
    ) -> Self {
        UnitaryFamily {
            n_params,
            form: Form::Hamiltonian {
                h: Arc::new(h),
                dh: Arc::new(dh),
                time,
            },
            series: SeriesConfig::default(),
        }
    }

    pub fn direct(n_params: usize, u: impl Fn(&[f64]) -> Result<CMatrix> + Send + Sync + 'static) -> Self {
        UnitaryFamily {
            n_params,
            form: Form::Direct {
                u: Arc::new(u),
                fd: FdConfig::default(),
            },
            series: SeriesConfig::default(),
        }
    }

    /// Finite-difference settings of the direct form; ignored by the Hamiltonian form.
    pub fn with_fd(mut self, cfg: FdConfig) -> Self {
        if let Form::Direct { fd, .. } = &mut self.form {
            *fd = cfg;
        }
        self
    }

    pub fn with_series(mut self, cfg: SeriesConfig) -> Self {
        self.series = cfg;
        self
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn is_hamiltonian_form(&self) -> bool {
        matches!(self.form, Form::Hamiltonian { .. })
    }

    pub fn unitary(&self, x: &[f64]) -> Result<CMatrix> {
        self.check_len(x)?;
        match &self.form {
            Form::Hamiltonian { h, time, .. } => {
                let hx = hamiltonian_at(h, x)?;
                matrix_exp(&hx.scale(C64::new(0.0, -*time)))
            }
            Form::Direct { u, .. } => {
                let ux = u(x)?;
                check_unitary(&ux)?;
                Ok(ux)
            }
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_params {
            return Err(Error::domain(format!(
                "unitary family expects {} parameters, got {}",
                self.n_params,
                x.len()
            )));
        }
        Ok(())
    }
}

fn hamiltonian_at(h: &Arc<MatrixFn>, x: &[f64]) -> Result<CMatrix> {
    let hx = h(x)?;
    if !hx.is_square() || !hx.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::domain("H(x) must be square and Hermitian"));
    }
    Ok(hx)
}

fn check_unitary(u: &CMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(Error::domain("U(x) must be square"));
    }
    let dev = (&u.adjoint() * u).max_abs_diff(&CMatrix::identity(u.rows()));
    if dev > UNITARY_TOL {
        return Err(Error::domain(format!("U(x) is not unitary (deviation {dev:e})")));
    }
    Ok(())
}

/// H_a = i(∂_aU†)U and K_a = i(∂_aU)U† = −U H_a U†.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub h_ops: Vec<CMatrix>,
    pub k_ops: Vec<CMatrix>,
    /// U(x) at the evaluation point.
    pub unitary: CMatrix,
}

impl GeneratorSet {
    pub fn len(&self) -> usize {
        self.h_ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_ops.is_empty()
    }

    /// ∂_aρ = −i[K_a, ρ] for ρ = Uρ₀U†.
    pub fn state_derivatives(&self, rho: &CMatrix) -> Vec<CMatrix> {
        self.k_ops
            .iter()
            .map(|k| k.commutator(rho).scale(C64::new(0.0, -1.0)))
            .collect()
    }
}

pub fn generator_h(family: &UnitaryFamily, x: &[f64]) -> Result<GeneratorSet> {
    family.check_len(x)?;
    let u = family.unitary(x)?;
    let h_ops = match &family.form {
        Form::Hamiltonian { h, dh, time } => {
            let hx = hamiltonian_at(h, x)?;
            let d = dh(x)?;
            if d.len() != family.n_params {
                return Err(Error::domain("∂H count does not match the parameter count"));
            }
            d.iter()
                .enumerate()
                .map(|(a, da)| {
                    if da.shape() != hx.shape() || !da.is_hermitian(HERMITIAN_TOL) {
                        return Err(Error::domain(format!("∂H for parameter {a} must be Hermitian and match H")));
                    }
                    commutator_series(&hx, da, *time, family.series)
                })
                .collect::<Result<Vec<_>>>()?
        }
        Form::Direct { u: uf, fd } => (0..family.n_params)
            .map(|a| {
                let du = unitary_derivative(uf, x, a, *fd, &u)?;
                Ok((&du.adjoint() * &u).scale(C64::new(0.0, 1.0)).hermitian_part())
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let k_ops = h_ops
        .iter()
        .map(|h| (&(&u * h) * &u.adjoint()).scale_real(-1.0).hermitian_part())
        .collect();
    Ok(GeneratorSet { h_ops, k_ops, unitary: u })
}

/// H_a = −Σ t^{n+1}/(n+1)!·(iH^×)ⁿ∂_aH, summed over a short interval τ = t/2^s and then
/// doubled with H_a(2τ) = H_a(τ) + V H_a(τ) V†, V = e^{iτH}.
fn commutator_series(h: &CMatrix, dh: &CMatrix, t: f64, cfg: SeriesConfig) -> Result<CMatrix> {
    let spread = 2.0 * h.norm() * t.abs();
    let halvings = if spread > 1.0 { spread.log2().ceil() as i32 } else { 0 };
    let tau = t / 2f64.powi(halvings);
    let mut g = series_sum(h, dh, tau, cfg)?;
    if halvings > 0 {
        let mut v = matrix_exp(&h.scale(C64::new(0.0, tau)))?;
        for _ in 0..halvings {
            g = &g + &(&(&v * &g) * &v.adjoint());
            v = &v * &v;
        }
    }
    Ok(g.hermitian_part())
}

fn series_sum(h: &CMatrix, dh: &CMatrix, t: f64, cfg: SeriesConfig) -> Result<CMatrix> {
    let mut term = dh.scale_real(t);
    let mut acc = term.clone();
    let mut small_run = 0;
    for n in 1..cfg.max_terms {
        if term.max_abs() == 0.0 {
            return Ok(acc.scale_real(-1.0));
        }
        term = h.commutator(&term).scale(C64::new(0.0, t / (n as f64 + 1.0)));
        acc += &term;
        if term.norm() < cfg.rel_tol * acc.norm() {
            small_run += 1;
            if small_run == 2 {
                return Ok(acc.scale_real(-1.0));
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::numerical(format!(
        "generator series did not converge in {} terms (‖H‖t = {:.3e}); use the direct form",
        cfg.max_terms,
        h.norm() * t
    )))
}

fn unitary_derivative(uf: &Arc<MatrixFn>, x: &[f64], a: usize, fd: FdConfig, u0: &CMatrix) -> Result<CMatrix> {
    let h = fd.step_for(x[a]);
    let at = |s: f64| -> Result<CMatrix> {
        let mut xs = x.to_vec();
        xs[a] += s;
        let us = uf(&xs).map_err(|e| Error::Propagation {
            index: a,
            source: Box::new(e),
        })?;
        check_unitary(&us)?;
        Ok(us)
    };
    Ok(match fd.scheme {
        FdScheme::Central => (&at(h)? - &at(-h)?).scale_real(0.5 / h),
        FdScheme::Forward => (&at(h)? - u0).scale_real(1.0 / h),
    })
}

/// QFIM of ρ₀ ↦ Uρ₀U† from the probe spectrum and the generators H_a.
///
/// Uses the pairwise form Σ 2(η_i − η_j)²/(η_i + η_j)·Re(⟨i|H_a|j⟩⟨j|H_b|i⟩), which equals the
/// covariance form term by term.
pub fn qfim_unitary(probe: &SpectralData, gens: &GeneratorSet) -> Result<QfimMatrix> {
    let n = probe.dim();
    if probe.rank() == 0 {
        return Err(Error::domain("probe has empty support"));
    }
    if gens.h_ops.iter().any(|h| h.shape() != (n, n)) {
        return Err(Error::domain("generator dimensions do not match the probe"));
    }
    let p = gens.len();
    let hs: Vec<CMatrix> = gens.h_ops.iter().map(|h| probe.to_eigenbasis(h)).collect();
    let lam: Vec<f64> = (0..n).map(|i| probe.lambda(i)).collect();
    let mut f = RMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let den = lam[i] + lam[j];
                    if den > 0.0 && i != j {
                        let w = (lam[i] - lam[j]).powi(2) / den;
                        s += 2.0 * w * (hs[a][(i, j)] * hs[b][(j, i)]).re;
                    }
                }
            }
            f[(a, b)] = s;
            f[(b, a)] = s;
        }
    }
    Ok(QfimMatrix::new(f))
}

/// ⟨ψ₀|[H_a, H_b]|ψ₀⟩/i for each pair.
#[derive(Clone, Debug)]
pub struct UnitaryAttainability {
    pub matrix: RMatrix,
    pub max_violation: f64,
    pub attainable: bool,
}

pub fn attainability_pure_unitary(psi0: &[C64], gens: &GeneratorSet, tol: f64) -> UnitaryAttainability {
    let p = gens.len();
    let hpsi: Vec<Vec<C64>> = gens.h_ops.iter().map(|h| h.mul_vec(psi0)).collect();
    let matrix = Matrix::from_fn(p, p, |a, b| {
        // ⟨[H_a,H_b]⟩ = 2i Im⟨H_aψ|H_bψ⟩
        2.0 * crate::numerics::inner(&hpsi[a], &hpsi[b]).im
    });
    let max_violation = matrix.max_abs();
    UnitaryAttainability {
        matrix,
        max_violation,
        attainable: max_violation < tol,
    }
}

/// ρ(x) = U(x)ρ₀U(x)† with derivatives −i[K_a, ρ].
pub fn evolved_family(family: UnitaryFamily, rho0: DensityMatrix) -> ParamFamily {
    let f2 = family.clone();
    let r2 = rho0.clone();
    ParamFamily::new(family.n_params(), move |x| Ok(rho0.conjugate_by(&family.unitary(x)?))).with_analytic(
        move |x| {
            let g = generator_h(&f2, x)?;
            let rho = r2.conjugate_by(&g.unitary);
            Ok(g.state_derivatives(rho.matrix()))
        },
    )
}
