use crate::error::{Error, Result};
use crate::numerics::{lu_solve, symmetric_eig, CMatrix, RMatrix, C64};

use super::QfimMatrix;

/// Generalized Gell-Mann matrices for su(d), normalized to Tr(κ_i κ_j) = 2δ_ij.
///
/// Order: symmetric and antisymmetric off-diagonal pairs for each j < k, then the diagonal ones.
/// For d = 2 this is (σx, σy, σz).
pub fn gell_mann_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in j + 1..d {
            let mut s = CMatrix::zeros(d, d);
            s[(j, k)] = C64::new(1.0, 0.0);
            s[(k, j)] = C64::new(1.0, 0.0);
            out.push(s);
            let mut a = CMatrix::zeros(d, d);
            a[(j, k)] = C64::new(0.0, -1.0);
            a[(k, j)] = C64::new(0.0, 1.0);
            out.push(a);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = C64::new(norm, 0.0);
        }
        m[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
        out.push(m);
    }
    out
}

fn bloch_scale(d: usize) -> f64 {
    (d as f64 * (d as f64 - 1.0) / 2.0).sqrt()
}

/// Bloch coordinates r with ρ = (I + √(d(d−1)/2) r·κ)/d; linear, so it also maps ∂ρ to ∂r.
pub fn bloch_vector(m: &CMatrix, generators: &[CMatrix]) -> Vec<f64> {
    let d = m.rows();
    let k = d as f64 / (2.0 * bloch_scale(d));
    generators.iter().map(|g| m.trace_product(g).re * k).collect()
}

/// QFIM in Bloch coordinates.
///
/// For d = 2 the closed form ∂_a r·∂_b r + (r·∂_a r)(r·∂_b r)/(1 − |r|²) is used, dropping the
/// second term for pure states. Other dimensions invert d/(2(d−1))·G − r rᵀ, which is singular
/// for pure states.
pub fn qfim_bloch(r: &[f64], dr: &[Vec<f64>], d: usize, generators: &[CMatrix]) -> Result<QfimMatrix> {
    let n = d * d - 1;
    if d < 2 || r.len() != n || dr.iter().any(|v| v.len() != n) {
        return Err(Error::domain(format!("Bloch vectors must have length {n} for d = {d}")));
    }
    let r2: f64 = r.iter().map(|x| x * x).sum();
    if r2 > 1.0 + 1e-10 {
        return Err(Error::domain(format!("|r|² = {r2} exceeds 1")));
    }
    let p = dr.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    if d == 2 {
        let pure = 1.0 - r2 < 1e-12;
        let f = RMatrix::from_fn(p, p, |a, b| {
            let base = dot(&dr[a], &dr[b]);
            if pure {
                base
            } else {
                base + dot(r, &dr[a]) * dot(r, &dr[b]) / (1.0 - r2)
            }
        });
        return Ok(QfimMatrix::new(f));
    }
    if generators.len() != n {
        return Err(Error::domain(format!("expected {n} su({d}) generators")));
    }
    let sym: Vec<CMatrix> = {
        let mut v = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                v.push(generators[i].anticommutator(&generators[j]));
            }
        }
        v
    };
    let coeff = ((d as f64 - 1.0) / (2.0 * d as f64)).sqrt();
    let mut g = RMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for (m, rm) in r.iter().enumerate() {
                if *rm != 0.0 {
                    s += 0.5 * sym[i * n + j].trace_product(&generators[m]).re * rm;
                }
            }
            g[(i, j)] = coeff * s + if i == j { 2.0 / d as f64 } else { 0.0 };
        }
    }
    let kfac = d as f64 / (2.0 * (d as f64 - 1.0));
    let bracket = RMatrix::from_fn(n, n, |i, j| kfac * g[(i, j)] - r[i] * r[j]);
    let emin = symmetric_eig(&bracket.hermitian_part())?.eigenvalues[0];
    if emin < 1e-12 {
        return Err(Error::unsupported(
            "Bloch bracket matrix is singular (pure state); use the qubit or pure-state route",
        ));
    }
    let mut rhs = RMatrix::zeros(n, p);
    for (a, v) in dr.iter().enumerate() {
        rhs.set_column(a, v);
    }
    let sol = lu_solve(&bracket, &rhs)?;
    let f = RMatrix::from_fn(p, p, |a, b| dot(&dr[b], &sol.column(a)));
    Ok(QfimMatrix::new(f))
}
