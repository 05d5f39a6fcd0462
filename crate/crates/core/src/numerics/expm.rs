use super::{lu_solve, CMatrix, Scalar, C64};
use crate::error::{Error, Result};

// Padé(6,6) coefficients c_k = (12-k)! 6! / (12! k! (6-k)!)
const PADE6: [f64; 7] = [
    1.0,
    0.5,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

/// exp(M) by scaling and squaring with a degree-6 Padé approximant.
pub fn matrix_exp(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::domain(format!(
            "matrix_exp needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::domain("matrix_exp input has non-finite entries"));
    }
    let n = m.rows();
    let norm = m.norm1();
    let mut s = 0u32;
    if norm > 0.5 {
        s = (norm / 0.5).log2().ceil() as u32;
        while norm / 2f64.powi(s as i32) > 0.5 {
            s += 1;
        }
    }
    let x = m.scale_real(1.0 / 2f64.powi(s as i32));

    let id = CMatrix::identity(n);
    let mut num = id.scale_real(PADE6[0]);
    let mut den = id.scale_real(PADE6[0]);
    let mut power = id;
    for (k, &ck) in PADE6.iter().enumerate().skip(1) {
        power = &power * &x;
        num.axpy(C64::from_f64(ck), &power);
        let sign = if k % 2 == 0 { ck } else { -ck };
        den.axpy(C64::from_f64(sign), &power);
    }
    let mut r = lu_solve(&den, &num)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::numerical("matrix_exp overflow"));
    }
    Ok(r)
}

/// Truncated Taylor series Σ_{k<terms} M^k/k!, used as an independent reference.
pub fn matrix_exp_taylor(m: &CMatrix, terms: usize) -> CMatrix {
    let n = m.rows();
    let mut acc = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..terms {
        term = (&term * m).scale_real(1.0 / k as f64);
        acc += &term;
    }
    acc
}
