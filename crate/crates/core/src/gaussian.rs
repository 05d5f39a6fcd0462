//! Bosonic Gaussian states: Williamson decomposition, SLD coefficients and the QFIM.
//!
//! Quadratures are ordered (q₁, p₁, …, q_m, p_m) with q = (a + a†)/√2, p = (a − a†)/(i√2), so the
//! vacuum has C = I/2 and Ω = ⊕[[0, 1], [−1, 0]]. To convert from the ħ = 2 convention divide
//! covariances by 2 and displacements by √2.

use crate::error::{Error, Result};
use crate::numerics::{c, hermitian_eig, real_inverse, symmetric_eig, Matrix, RMatrix, C64};
use crate::qfim::QfimMatrix;

const SYMMETRY_TOL: f64 = 1e-10;
const UNCERTAINTY_TOL: f64 = 1e-9;
const DIVERGENCE_TOL: f64 = 1e-10;

/// Ω = ⊕_m [[0, 1], [−1, 0]]
pub fn symplectic_form(modes: usize) -> RMatrix {
    let mut o = RMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

/// Displacement ⟨R⟩ and covariance C of an m-mode Gaussian state.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    pub displacement: Vec<f64>,
    pub covariance: RMatrix,
}

impl GaussianState {
    pub fn new(displacement: Vec<f64>, covariance: RMatrix) -> Result<Self> {
        let n = covariance.rows();
        if !covariance.is_square() || n == 0 || n % 2 == 1 {
            return Err(Error::domain(format!(
                "covariance must be 2m x 2m, got {}x{}",
                covariance.rows(),
                covariance.cols()
            )));
        }
        if displacement.len() != n {
            return Err(Error::domain(format!(
                "displacement has length {}, expected {n}",
                displacement.len()
            )));
        }
        if !covariance.is_finite() || displacement.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("Gaussian moments must be finite"));
        }
        if !covariance.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::domain("covariance is not symmetric"));
        }
        let covariance = covariance.hermitian_part();
        let min = uncertainty_min_eigenvalue(&covariance)?;
        if min < -UNCERTAINTY_TOL {
            return Err(Error::domain(format!(
                "covariance violates the uncertainty relation (min eigenvalue of C + iΩ/2 is {min:e})"
            )));
        }
        Ok(GaussianState {
            displacement,
            covariance,
        })
    }

    pub fn vacuum(modes: usize) -> Self {
        GaussianState {
            displacement: vec![0.0; 2 * modes],
            covariance: RMatrix::identity(2 * modes).scale_real(0.5),
        }
    }

    /// Single-mode coherent state |α⟩.
    pub fn coherent(alpha: C64) -> Self {
        let s = std::f64::consts::SQRT_2;
        GaussianState {
            displacement: vec![s * alpha.re, s * alpha.im],
            covariance: RMatrix::identity(2).scale_real(0.5),
        }
    }

    pub fn thermal(nbar: f64) -> Result<Self> {
        if nbar < 0.0 {
            return Err(Error::domain("mean occupation must be non-negative"));
        }
        Ok(GaussianState {
            displacement: vec![0.0; 2],
            covariance: RMatrix::identity(2).scale_real(nbar + 0.5),
        })
    }

    /// Squeezed thermal state with q-variance (n̄+½)e^{−2r} along the direction rotated by φ.
    pub fn squeezed_thermal(nbar: f64, r: f64, phi: f64) -> Result<Self> {
        GaussianState::new(vec![0.0; 2], squeezed_thermal_covariance(nbar, r, phi))
    }

    pub fn modes(&self) -> usize {
        self.covariance.rows() / 2
    }

    /// Product state with `other`, modes of `self` first.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let n = self.covariance.rows();
        let m = other.covariance.rows();
        let mut cov = RMatrix::zeros(n + m, n + m);
        cov.set_block(0, 0, &self.covariance);
        cov.set_block(n, n, &other.covariance);
        let mut d = self.displacement.clone();
        d.extend_from_slice(&other.displacement);
        GaussianState {
            displacement: d,
            covariance: cov,
        }
    }
}

/// (n̄+½)·R(φ)diag(e^{−2r}, e^{2r})R(φ)ᵀ
pub fn squeezed_thermal_covariance(nbar: f64, r: f64, phi: f64) -> RMatrix {
    let rot = RMatrix::from_rows(&[vec![phi.cos(), -phi.sin()], vec![phi.sin(), phi.cos()]]);
    let d = RMatrix::from_diag(&[(-2.0 * r).exp(), (2.0 * r).exp()]);
    (&(&rot * &d) * &rot.transpose()).scale_real(nbar + 0.5)
}

fn uncertainty_min_eigenvalue(cov: &RMatrix) -> Result<f64> {
    let m = cov.rows() / 2;
    let om = symplectic_form(m);
    let h = Matrix::from_fn(2 * m, 2 * m, |i, j| c(cov[(i, j)], 0.5 * om[(i, j)]));
    Ok(hermitian_eig(&h)?.eigenvalues[0])
}

fn symmetric_function(m: &RMatrix, f: impl Fn(f64) -> f64) -> Result<RMatrix> {
    let e = symmetric_eig(m)?;
    let n = m.rows();
    let v = &e.eigenvectors;
    Ok(Matrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * f(e.eigenvalues[k]) * v[(j, k)]).sum()
    }))
}

/// C = S·(⊕ c_k I₂)·Sᵀ with S symplectic.
#[derive(Clone, Debug)]
pub struct WilliamsonDecomp {
    pub symplectic: RMatrix,
    /// Symplectic eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
}

impl WilliamsonDecomp {
    /// ⊕ c_k I₂
    pub fn normal_form(&self) -> RMatrix {
        let d: Vec<f64> = self.eigenvalues.iter().flat_map(|&c| [c, c]).collect();
        RMatrix::from_diag(&d)
    }
}

pub fn williamson(cov: &RMatrix) -> Result<WilliamsonDecomp> {
    let state = GaussianState::new(vec![0.0; cov.rows()], cov.clone())?;
    let cov = &state.covariance;
    let m = state.modes();
    let sqrt_c = symmetric_function(cov, |l| l.max(0.0).sqrt())?;
    let inv_sqrt_c = symmetric_function(cov, |l| 1.0 / l.sqrt())?;
    let a = &(&inv_sqrt_c * &symplectic_form(m)) * &inv_sqrt_c;
    // iA is Hermitian with eigenvalues ±1/c_k
    let ia = a.map(|v| c(0.0, v));
    let e = hermitian_eig(&ia)?;
    let mut o = RMatrix::zeros(2 * m, 2 * m);
    let mut eigenvalues = Vec::with_capacity(m);
    // largest 1/c first gives ascending c
    for k in 0..m {
        let idx = 2 * m - 1 - k;
        let inv_c = e.eigenvalues[idx];
        eigenvalues.push(1.0 / inv_c);
        let mut w = e.vector(idx);
        let pivot = w
            .iter()
            .copied()
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        for z in &mut w {
            *z *= phase;
        }
        let s2 = std::f64::consts::SQRT_2;
        for i in 0..2 * m {
            o[(i, 2 * k)] = s2 * w[i].im;
            o[(i, 2 * k + 1)] = s2 * w[i].re;
        }
    }
    let d: Vec<f64> = eigenvalues.iter().flat_map(|&c| [1.0 / c.sqrt(); 2]).collect();
    let symplectic = &(&sqrt_c * &o) * &RMatrix::from_diag(&d);
    Ok(WilliamsonDecomp {
        symplectic,
        eigenvalues,
    })
}

/// L_a = L⁰_a + (L¹_a)ᵀR + RᵀG_aR for each parameter.
#[derive(Clone, Debug)]
pub struct GaussianSld {
    pub l0: Vec<f64>,
    pub l1: Vec<Vec<f64>>,
    pub g: Vec<RMatrix>,
    /// True when a 0/0 pure-mode channel was set to zero.
    pub divergent_channels_zeroed: bool,
}

fn check_derivatives(state: &GaussianState, dd: &[Vec<f64>], dc: &[RMatrix]) -> Result<()> {
    let n = state.covariance.rows();
    if dd.len() != dc.len() {
        return Err(Error::domain(format!(
            "{} displacement derivatives but {} covariance derivatives",
            dd.len(),
            dc.len()
        )));
    }
    for (a, (v, m)) in dd.iter().zip(dc).enumerate() {
        if v.len() != n || m.shape() != (n, n) {
            return Err(Error::domain(format!("derivative {a} has inconsistent dimensions")));
        }
        if !m.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::domain(format!("covariance derivative {a} is not symmetric")));
        }
    }
    Ok(())
}

/// Solves ΩGΩ + 4CGC = 2∂C in the Williamson frame, block by block.
fn solve_g(w: &WilliamsonDecomp, s_inv: &RMatrix, dc: &RMatrix, zeroed: &mut bool) -> Result<RMatrix> {
    let m = w.eigenvalues.len();
    let x = (&(s_inv * dc) * &s_inv.transpose()).scale_real(2.0);
    let scale = x.norm().max(1.0);
    let mut y = RMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        for k in 0..m {
            let b = x.block(2 * j, 2 * k, 2, 2);
            // X = a·I + b·J + c·σz + d·σx with J = [[0, 1], [−1, 0]]
            let ca = 0.5 * (b[(0, 0)] + b[(1, 1)]);
            let cb = 0.5 * (b[(0, 1)] - b[(1, 0)]);
            let cz = 0.5 * (b[(0, 0)] - b[(1, 1)]);
            let cx = 0.5 * (b[(0, 1)] + b[(1, 0)]);
            let cc = 4.0 * w.eigenvalues[j] * w.eigenvalues[k];
            let (mut ya, mut yb) = (0.0, 0.0);
            if cc - 1.0 < DIVERGENCE_TOL {
                if ca.abs().max(cb.abs()) > DIVERGENCE_TOL * scale {
                    return Err(Error::numerical(format!(
                        "covariance derivative has weight {:e} in the divergent pure-mode channel ({j}, {k})",
                        ca.abs().max(cb.abs())
                    )));
                }
                *zeroed = true;
            } else {
                ya = ca / (cc - 1.0);
                yb = cb / (cc - 1.0);
            }
            let (yz, yx) = (cz / (cc + 1.0), cx / (cc + 1.0));
            y[(2 * j, 2 * k)] = ya + yz;
            y[(2 * j, 2 * k + 1)] = yb + yx;
            y[(2 * j + 1, 2 * k)] = -yb + yx;
            y[(2 * j + 1, 2 * k + 1)] = ya - yz;
        }
    }
    Ok((&(&s_inv.transpose() * &y) * s_inv).hermitian_part())
}

pub fn gaussian_sld(state: &GaussianState, dd: &[Vec<f64>], dc: &[RMatrix]) -> Result<GaussianSld> {
    check_derivatives(state, dd, dc)?;
    let w = williamson(&state.covariance)?;
    let s_inv = real_inverse(&w.symplectic)?;
    let c_inv = real_inverse(&state.covariance)?;
    let d = &state.displacement;
    let mut zeroed = false;
    let mut out = GaussianSld {
        l0: Vec::new(),
        l1: Vec::new(),
        g: Vec::new(),
        divergent_channels_zeroed: false,
    };
    for (dda, dca) in dd.iter().zip(dc) {
        let g = solve_g(&w, &s_inv, &dca.hermitian_part(), &mut zeroed)?;
        let cinv_dd = c_inv.mul_vec(dda);
        let gd = g.mul_vec(d);
        let l1: Vec<f64> = cinv_dd.iter().zip(&gd).map(|(u, v)| u - 2.0 * v).collect();
        let dgd: f64 = d.iter().zip(&gd).map(|(u, v)| u * v).sum();
        let dd_cinv_d: f64 = cinv_dd.iter().zip(d).map(|(u, v)| u * v).sum();
        let l0 = dgd - dd_cinv_d - g.trace_product(&state.covariance);
        out.l0.push(l0);
        out.l1.push(l1);
        out.g.push(g);
    }
    out.divergent_channels_zeroed = zeroed;
    Ok(out)
}

/// F_ab = Tr(G_a ∂_bC) + (∂_a d)ᵀC⁻¹∂_b d
pub fn gaussian_qfim(state: &GaussianState, dd: &[Vec<f64>], dc: &[RMatrix]) -> Result<QfimMatrix> {
    let sld = gaussian_sld(state, dd, dc)?;
    let c_inv = real_inverse(&state.covariance)?;
    let p = dd.len();
    let f = Matrix::from_fn(p, p, |a, b| {
        let disp: f64 = dd[a].iter().zip(c_inv.mul_vec(&dd[b])).map(|(u, v)| u * v).sum();
        sld.g[a].trace_product(&dc[b]) + disp
    });
    Ok(QfimMatrix::new(f))
}

/// Single-mode G_a from the closed forms: 2Ω∂CΩ/(4c²+1) for pure states and
/// 2(4c²−1)/(4c²+1)·Ω∂JΩ with J = C/(4c²−1) otherwise, c² = det C.
pub fn single_mode_g(cov: &RMatrix, dc: &RMatrix) -> Result<RMatrix> {
    if cov.shape() != (2, 2) || dc.shape() != (2, 2) {
        return Err(Error::domain("single-mode closed form needs 2x2 matrices"));
    }
    let om = symplectic_form(1);
    let det = cov.det();
    let k = 4.0 * det - 1.0;
    let inner = if k.abs() < DIVERGENCE_TOL {
        dc.scale_real(2.0 / (4.0 * det + 1.0))
    } else {
        // ∂(det C) = det C·Tr(C⁻¹∂C)
        let ddet = det * real_inverse(cov)?.trace_product(dc);
        let dj = &dc.scale_real(1.0 / k) - &cov.scale_real(4.0 * ddet / (k * k));
        dj.scale_real(2.0 * k / (4.0 * det + 1.0))
    };
    Ok((&(&om * &inner) * &om).hermitian_part())
}
