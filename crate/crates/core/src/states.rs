//! Density matrices, spectral data with support detection, and parameterized families.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, vec_norm, CMatrix, Matrix, C64};

/// Tolerance used when validating density matrices.
pub const STATE_TOL: f64 = 1e-10;
/// Default support threshold, relative to the largest eigenvalue.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-12;
/// Default relative finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-6;
const DEGENERACY_GAP: f64 = 1e-10;

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates and wraps `matrix`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::domain("density matrix must be square and non-empty"));
        }
        if !matrix.is_finite() {
            return Err(Error::domain("density matrix has non-finite entries"));
        }
        if !matrix.is_hermitian(STATE_TOL) {
            return Err(Error::domain("density matrix is not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::domain(format!("density matrix trace is {tr}, expected 1")));
        }
        let eig = hermitian_eig(&matrix)?;
        if eig.eigenvalues[0] < -STATE_TOL {
            return Err(Error::domain(format!(
                "density matrix has negative eigenvalue {:e}",
                eig.eigenvalues[0]
            )));
        }
        Ok(DensityMatrix {
            matrix: matrix.hermitian_part(),
        })
    }

    /// Wraps a matrix already known to be a state; only cheap checks are run.
    pub fn new_trusted(matrix: CMatrix) -> Self {
        debug_assert!(matrix.is_square());
        DensityMatrix {
            matrix: matrix.hermitian_part(),
        }
    }

    /// |ψ⟩⟨ψ| for a normalized ψ.
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let n = vec_norm(psi);
        if (n - 1.0).abs() > STATE_TOL {
            return Err(Error::domain(format!("state vector norm is {n}, expected 1")));
        }
        Ok(DensityMatrix {
            matrix: CMatrix::projector(psi),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: CMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    /// Tr(ρ A)
    pub fn expect(&self, a: &CMatrix) -> C64 {
        self.matrix.trace_product(a)
    }

    /// ρ₁ ⊗ ρ₂
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    /// U ρ U†
    pub fn conjugate_by(&self, u: &CMatrix) -> DensityMatrix {
        DensityMatrix::new_trusted(&(u * &self.matrix) * &u.adjoint())
    }

    pub fn spectral(&self) -> Result<SpectralData> {
        spectral_decompose(self, DEFAULT_SUPPORT_THRESHOLD)
    }
}

/// Eigen-data of a state with its support.
#[derive(Clone, Debug)]
pub struct SpectralData {
    /// Ascending eigenvalues as returned by the eigensolver.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns.
    pub eigenvectors: CMatrix,
    /// Indices with λ_i above the absolute threshold.
    pub support_indices: Vec<usize>,
    /// Absolute threshold (relative threshold times λ_max).
    pub support_threshold: f64,
    /// Groups of (numerically) degenerate eigenvalues.
    pub degenerate_blocks: Vec<Vec<usize>>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn rank(&self) -> usize {
        self.support_indices.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.dim()
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.eigenvalues[i] > self.support_threshold
    }

    /// Eigenvalue with values outside the support clamped to zero.
    pub fn lambda(&self, i: usize) -> f64 {
        if self.in_support(i) {
            self.eigenvalues[i]
        } else {
            0.0
        }
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.column(i)
    }

    /// V† A V
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &(&self.eigenvectors.adjoint() * a) * &self.eigenvectors
    }

    /// V A V†
    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &(&self.eigenvectors * a) * &self.eigenvectors.adjoint()
    }

    /// The state rebuilt from the clamped spectrum.
    pub fn density(&self) -> CMatrix {
        let n = self.dim();
        let d: Vec<C64> = (0..n).map(|i| C64::new(self.lambda(i), 0.0)).collect();
        self.from_eigenbasis(&CMatrix::from_diag(&d))
    }

    /// √ρ from the stored spectrum.
    pub fn sqrt_matrix(&self) -> CMatrix {
        let n = self.dim();
        let d: Vec<C64> = (0..n).map(|i| C64::new(self.lambda(i).max(0.0).sqrt(), 0.0)).collect();
        self.from_eigenbasis(&CMatrix::from_diag(&d))
    }
}

/// Eigen-decomposes ρ and marks eigenvalues above `support_threshold · λ_max` as support.
pub fn spectral_decompose(rho: &DensityMatrix, support_threshold: f64) -> Result<SpectralData> {
    if !(support_threshold > 0.0 && support_threshold < 1.0) {
        return Err(Error::domain(format!(
            "support threshold {support_threshold} outside (0, 1)"
        )));
    }
    let eig = hermitian_eig(rho.matrix())?;
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let abs_threshold = support_threshold * lmax.max(0.0);
    let support_indices: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > abs_threshold)
        .collect();
    if support_indices.is_empty() {
        return Err(Error::domain("support threshold excludes every eigenvalue"));
    }
    let mut degenerate_blocks: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        match degenerate_blocks.last_mut() {
            Some(block)
                if (l - eig.eigenvalues[*block.last().unwrap()]).abs()
                    <= DEGENERACY_GAP * lmax.abs().max(1e-300) =>
            {
                block.push(i)
            }
            _ => degenerate_blocks.push(vec![i]),
        }
    }
    Ok(SpectralData {
        eigenvalues: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
        support_indices,
        support_threshold: abs_threshold,
        degenerate_blocks,
    })
}

/// Finite-difference scheme for derivative providers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdScheme {
    Central,
    Forward,
}

/// Finite-difference configuration; the step for parameter a is `step·max(1, |x_a|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    pub scheme: FdScheme,
    pub step: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            scheme: FdScheme::Central,
            step: DEFAULT_FD_STEP,
        }
    }
}

impl FdConfig {
    pub fn central(step: f64) -> Self {
        FdConfig {
            scheme: FdScheme::Central,
            step,
        }
    }

    pub fn step_for(&self, x: f64) -> f64 {
        self.step * x.abs().max(1.0)
    }
}

type DensityFn = dyn Fn(&[f64]) -> Result<DensityMatrix> + Send + Sync;
type MatrixListFn = dyn Fn(&[f64]) -> Result<Vec<CMatrix>> + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Result<Vec<C64>> + Send + Sync;
type VectorListFn = dyn Fn(&[f64]) -> Result<Vec<Vec<C64>>> + Send + Sync;

/// Source of ∂_a ρ for a family.
#[derive(Clone)]
pub enum DerivativeProvider {
    Analytic(Arc<MatrixListFn>),
    FiniteDifference(FdConfig),
}

/// A differentiable map from parameters to density matrices.
///
/// Callbacks must be reentrant; grid evaluations may call them from several threads.
#[derive(Clone)]
pub struct ParamFamily {
    n_params: usize,
    evaluate: Arc<DensityFn>,
    derivatives: DerivativeProvider,
}

impl fmt::Debug for ParamFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.derivatives {
            DerivativeProvider::Analytic(_) => "analytic".to_string(),
            DerivativeProvider::FiniteDifference(cfg) => format!("{cfg:?}"),
        };
        f.debug_struct("ParamFamily")
            .field("n_params", &self.n_params)
            .field("derivatives", &kind)
            .finish()
    }
}

impl ParamFamily {
    /// Family with default central finite differences.
    pub fn new(
        n_params: usize,
        evaluate: impl Fn(&[f64]) -> Result<DensityMatrix> + Send + Sync + 'static,
    ) -> Self {
        ParamFamily {
            n_params,
            evaluate: Arc::new(evaluate),
            derivatives: DerivativeProvider::FiniteDifference(FdConfig::default()),
        }
    }

    pub fn with_analytic(
        mut self,
        derivatives: impl Fn(&[f64]) -> Result<Vec<CMatrix>> + Send + Sync + 'static,
    ) -> Self {
        self.derivatives = DerivativeProvider::Analytic(Arc::new(derivatives));
        self
    }

    pub fn with_finite_difference(mut self, cfg: FdConfig) -> Self {
        self.derivatives = DerivativeProvider::FiniteDifference(cfg);
        self
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn provider(&self) -> &DerivativeProvider {
        &self.derivatives
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<DensityMatrix> {
        self.check_len(x)?;
        (self.evaluate)(x)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_params {
            return Err(Error::domain(format!(
                "family expects {} parameters, got {}",
                self.n_params,
                x.len()
            )));
        }
        Ok(())
    }
}

/// ∂_a ρ at x for every parameter, analytic or by finite differences.
pub fn state_derivatives(family: &ParamFamily, x: &[f64]) -> Result<Vec<CMatrix>> {
    family.check_len(x)?;
    match &family.derivatives {
        DerivativeProvider::Analytic(f) => {
            let d = f(x)?;
            if d.len() != family.n_params {
                return Err(Error::domain("analytic derivative count mismatch"));
            }
            Ok(d)
        }
        DerivativeProvider::FiniteDifference(cfg) => {
            let eval = |a: usize, x: &[f64]| {
                (family.evaluate)(x).map_err(|e| Error::Propagation {
                    index: a,
                    source: Box::new(e),
                })
            };
            let base = match cfg.scheme {
                FdScheme::Forward => Some(eval(0, x)?),
                FdScheme::Central => None,
            };
            (0..family.n_params)
                .map(|a| {
                    let h = cfg.step_for(x[a]);
                    let mut xp = x.to_vec();
                    xp[a] += h;
                    let plus = eval(a, &xp)?;
                    let d = match &base {
                        Some(b) => (plus.matrix() - b.matrix()).scale_real(1.0 / h),
                        None => {
                            let mut xm = x.to_vec();
                            xm[a] -= h;
                            let minus = eval(a, &xm)?;
                            (plus.matrix() - minus.matrix()).scale_real(0.5 / h)
                        }
                    };
                    Ok(traceless_hermitian(&d))
                })
                .collect()
        }
    }
}

fn traceless_hermitian(d: &CMatrix) -> CMatrix {
    let mut h = d.hermitian_part();
    let n = h.rows();
    let shift = h.trace().re / n as f64;
    for i in 0..n {
        h[(i, i)] -= C64::new(shift, 0.0);
    }
    h
}

/// Source of ∂_a|ψ⟩ for a pure family.
#[derive(Clone)]
pub enum PureDerivativeProvider {
    Analytic(Arc<VectorListFn>),
    FiniteDifference(FdConfig),
}

/// A differentiable map from parameters to normalized state vectors.
///
/// Finite differences require `evaluate` to use a smooth global-phase convention.
#[derive(Clone)]
pub struct PureFamily {
    n_params: usize,
    evaluate: Arc<VectorFn>,
    derivatives: PureDerivativeProvider,
}

impl fmt::Debug for PureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PureFamily")
            .field("n_params", &self.n_params)
            .finish_non_exhaustive()
    }
}

impl PureFamily {
    pub fn new(
        n_params: usize,
        evaluate: impl Fn(&[f64]) -> Result<Vec<C64>> + Send + Sync + 'static,
    ) -> Self {
        PureFamily {
            n_params,
            evaluate: Arc::new(evaluate),
            derivatives: PureDerivativeProvider::FiniteDifference(FdConfig::default()),
        }
    }

    pub fn with_analytic(
        mut self,
        derivatives: impl Fn(&[f64]) -> Result<Vec<Vec<C64>>> + Send + Sync + 'static,
    ) -> Self {
        self.derivatives = PureDerivativeProvider::Analytic(Arc::new(derivatives));
        self
    }

    pub fn with_finite_difference(mut self, cfg: FdConfig) -> Self {
        self.derivatives = PureDerivativeProvider::FiniteDifference(cfg);
        self
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<C64>> {
        if x.len() != self.n_params {
            return Err(Error::domain(format!(
                "family expects {} parameters, got {}",
                self.n_params,
                x.len()
            )));
        }
        let psi = (self.evaluate)(x)?;
        let n = vec_norm(&psi);
        if (n - 1.0).abs() > STATE_TOL {
            return Err(Error::domain(format!("state vector norm is {n}, expected 1")));
        }
        Ok(psi)
    }

    /// ∂_a|ψ⟩ for every parameter.
    pub fn derivatives(&self, x: &[f64]) -> Result<Vec<Vec<C64>>> {
        match &self.derivatives {
            PureDerivativeProvider::Analytic(f) => f(x),
            PureDerivativeProvider::FiniteDifference(cfg) => (0..self.n_params)
                .map(|a| {
                    let h = cfg.step_for(x[a]);
                    let wrap = |e| Error::Propagation {
                        index: a,
                        source: Box::new(e),
                    };
                    let mut xp = x.to_vec();
                    xp[a] += h;
                    let plus = self.evaluate(&xp).map_err(wrap)?;
                    let (minus, scale) = match cfg.scheme {
                        FdScheme::Central => {
                            let mut xm = x.to_vec();
                            xm[a] -= h;
                            (self.evaluate(&xm).map_err(wrap)?, 0.5 / h)
                        }
                        FdScheme::Forward => (self.evaluate(x)?, 1.0 / h),
                    };
                    Ok(plus
                        .iter()
                        .zip(&minus)
                        .map(|(p, m)| (p - m) * scale)
                        .collect())
                })
                .collect(),
        }
    }

    /// The density-matrix family |ψ(x)⟩⟨ψ(x)| with derivatives |∂ψ⟩⟨ψ| + |ψ⟩⟨∂ψ|.
    pub fn to_density_family(&self) -> ParamFamily {
        let this = self.clone();
        let this2 = self.clone();
        ParamFamily::new(self.n_params, move |x| DensityMatrix::from_pure(&this.evaluate(x)?))
            .with_analytic(move |x| {
                let psi = this2.evaluate(x)?;
                Ok(this2
                    .derivatives(x)?
                    .iter()
                    .map(|d| pure_density_derivative(&psi, d))
                    .collect())
            })
    }
}

/// |∂ψ⟩⟨ψ| + |ψ⟩⟨∂ψ|
pub fn pure_density_derivative(psi: &[C64], dpsi: &[C64]) -> CMatrix {
    &CMatrix::outer(dpsi, psi) + &CMatrix::outer(psi, dpsi)
}

/// Builds a density matrix from a list of (weight, pure state) pairs.
pub fn mixture(terms: &[(f64, Vec<C64>)]) -> Result<DensityMatrix> {
    let n = terms
        .first()
        .map(|t| t.1.len())
        .ok_or_else(|| Error::domain("empty mixture"))?;
    let mut m: CMatrix = Matrix::zeros(n, n);
    for (w, v) in terms {
        m.axpy(C64::new(*w, 0.0), &CMatrix::projector(v));
    }
    DensityMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, cr};

    #[test]
    fn maximally_mixed_spectrum() {
        let s = spectral_decompose(&DensityMatrix::maximally_mixed(2), 1e-12).unwrap();
        assert_eq!(s.rank(), 2);
        assert!((s.eigenvalues[0] - 0.5).abs() < 1e-15);
        assert_eq!(s.degenerate_blocks, vec![vec![0, 1]]);
    }

    #[test]
    fn pure_state_support() {
        let rho = DensityMatrix::from_pure(&[cr(1.), cr(0.)]).unwrap();
        let s = spectral_decompose(&rho, 1e-12).unwrap();
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn zero_eigenvalue_excluded() {
        let rho = DensityMatrix::new(CMatrix::from_diag(&[cr(0.7), cr(0.3), cr(0.)])).unwrap();
        let s = spectral_decompose(&rho, 1e-12).unwrap();
        let mut idx: Vec<f64> = s.support_indices.iter().map(|&i| s.eigenvalues[i]).collect();
        idx.sort_by(f64::total_cmp);
        assert_eq!(s.rank(), 2);
        assert!((idx[0] - 0.3).abs() < 1e-15 && (idx[1] - 0.7).abs() < 1e-15);
        let total: f64 = s.eigenvalues.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_threshold_rejected() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(spectral_decompose(&rho, 0.0).is_err());
        assert!(spectral_decompose(&rho, 1.0).is_err());
        assert!(spectral_decompose(&rho, 0.9).is_ok());
    }

    #[test]
    fn validation_rejects_bad_states() {
        assert!(DensityMatrix::new(CMatrix::from_diag(&[cr(0.5), cr(0.6)])).is_err());
        assert!(DensityMatrix::new(CMatrix::from_diag(&[cr(1.2), cr(-0.2)])).is_err());
        let nh = CMatrix::from_rows(&[vec![cr(0.5), cr(0.1)], vec![cr(0.), cr(0.5)]]);
        assert!(DensityMatrix::new(nh).is_err());
        assert!(DensityMatrix::from_pure(&[cr(1.), cr(1.)]).is_err());
    }

    #[test]
    fn constant_family_has_zero_derivatives() {
        let fam = ParamFamily::new(2, |_| Ok(DensityMatrix::maximally_mixed(2)));
        for d in state_derivatives(&fam, &[0.3, -1.0]).unwrap() {
            assert_eq!(d.max_abs(), 0.0);
        }
    }

    fn theta_phi(x: &[f64]) -> Vec<C64> {
        vec![cr(x[0].cos()), C64::from_polar(x[0].sin(), x[1])]
    }

    #[test]
    fn pure_family_fd_matches_analytic() {
        let fd = PureFamily::new(2, |x| Ok(theta_phi(x))).to_density_family();
        let an = PureFamily::new(2, |x| Ok(theta_phi(x)))
            .with_analytic(|x| {
                let (t, p) = (x[0], x[1]);
                Ok(vec![
                    vec![cr(-t.sin()), C64::from_polar(t.cos(), p)],
                    vec![cr(0.), C64::from_polar(t.sin(), p) * c(0., 1.)],
                ])
            })
            .to_density_family();
        let x = [0.4, 1.1];
        let d1 = state_derivatives(&fd, &x).unwrap();
        let d2 = state_derivatives(&an, &x).unwrap();
        for (a, b) in d1.iter().zip(&d2) {
            assert!(a.max_abs_diff(b) < 1e-6);
        }
    }

    #[test]
    fn fd_error_converges() {
        // ρ(θ) for the pure θ family; error against the analytic derivative must drop with h.
        let analytic = |t: f64| {
            let psi = [cr(t.cos()), cr(t.sin())];
            let d = [cr(-t.sin()), cr(t.cos())];
            pure_density_derivative(&psi, &d)
        };
        let t = 0.7;
        let mut errs = Vec::new();
        for h in [1e-2, 5e-3, 2.5e-3] {
            let fam = PureFamily::new(1, |x| Ok(vec![cr(x[0].cos()), cr(x[0].sin())]))
                .with_finite_difference(FdConfig::central(h))
                .to_density_family();
            let d = state_derivatives(&fam, &[t]).unwrap();
            errs.push(d[0].max_abs_diff(&analytic(t)));
        }
        assert!(errs[0] / errs[1] >= 3.0 && errs[1] / errs[2] >= 3.0, "{errs:?}");
    }

    #[test]
    fn fd_propagates_parameter_index() {
        let fam = ParamFamily::new(2, |x| {
            if x[1] > 1.0 {
                Err(Error::domain("out of range"))
            } else {
                Ok(DensityMatrix::maximally_mixed(2))
            }
        });
        match state_derivatives(&fam, &[0.0, 1.0]) {
            Err(Error::Propagation { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
