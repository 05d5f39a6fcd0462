//! Truncated Fock-space operators and states.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::{cr, CMatrix, Matrix, C64};

/// Largest cutoff tried by the adaptive helpers.
pub const MAX_CUTOFF: usize = 200;

/// a with ⟨n−1|a|n⟩ = √n on levels 0..cutoff.
pub fn annihilation(cutoff: usize) -> CMatrix {
    Matrix::from_fn(cutoff, cutoff, |i, j| if j == i + 1 { cr((j as f64).sqrt()) } else { cr(0.0) })
}

pub fn creation(cutoff: usize) -> CMatrix {
    annihilation(cutoff).adjoint()
}

pub fn number(cutoff: usize) -> CMatrix {
    CMatrix::from_diag(&(0..cutoff).map(|n| cr(n as f64)).collect::<Vec<_>>())
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Smallest cutoff whose tail population is below `tail_tol`, from a population function.
pub fn adaptive_cutoff(population: impl Fn(usize) -> f64, tail_tol: f64) -> Result<usize> {
    let mut total = 0.0;
    for n in 0..MAX_CUTOFF {
        total += population(n);
        if 1.0 - total < tail_tol {
            return Ok(n + 1);
        }
    }
    Err(Error::numerical(format!(
        "Fock cutoff {MAX_CUTOFF} leaves a tail population of {:e}",
        1.0 - total
    )))
}

/// Coherent state |α⟩ truncated at `cutoff` levels.
pub fn coherent(alpha: C64, cutoff: usize) -> Vec<C64> {
    let r = alpha.norm();
    (0..cutoff)
        .map(|n| {
            if n == 0 {
                return cr((-0.5 * r * r).exp());
            }
            if r == 0.0 {
                return cr(0.0);
            }
            let mag = (-0.5 * r * r + n as f64 * r.ln() - 0.5 * ln_factorial(n)).exp();
            C64::from_polar(mag, n as f64 * alpha.arg())
        })
        .collect()
}

pub fn coherent_population(alpha: C64) -> impl Fn(usize) -> f64 {
    let r2 = alpha.norm_sqr();
    move |n| {
        if r2 == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        (-r2 + n as f64 * r2.ln() - ln_factorial(n)).exp()
    }
}

/// exp(r(a² − a†²)/2)|0⟩, which squeezes q for r > 0.
pub fn squeezed_vacuum(r: f64, cutoff: usize) -> Vec<C64> {
    let th = r.tanh();
    let pref = 1.0 / r.cosh().sqrt();
    (0..cutoff)
        .map(|m| {
            if m % 2 == 1 {
                return cr(0.0);
            }
            let n = m / 2;
            let log_mag = 0.5 * ln_factorial(2 * n) - n as f64 * 2f64.ln() - ln_factorial(n);
            cr(pref * (-th).powi(n as i32) * log_mag.exp())
        })
        .collect()
}

pub fn squeezed_population(r: f64) -> impl Fn(usize) -> f64 {
    move |m| squeezed_vacuum(r, m + 1)[m].norm_sqr()
}

/// n̄^k/(n̄+1)^{k+1}
pub fn thermal_populations(nbar: f64, cutoff: usize) -> Vec<f64> {
    let q = nbar / (nbar + 1.0);
    (0..cutoff).map(|k| q.powi(k as i32) / (nbar + 1.0)).collect()
}

/// Multimode pure state stored as occupation tuple → amplitude.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MultimodeState {
    modes: usize,
    amps: BTreeMap<Vec<u32>, C64>,
}

impl MultimodeState {
    pub fn new(modes: usize) -> Self {
        MultimodeState {
            modes,
            amps: BTreeMap::new(),
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Adds `amp` to the amplitude of `occupation`.
    pub fn add(&mut self, occupation: Vec<u32>, amp: C64) {
        assert_eq!(occupation.len(), self.modes, "occupation tuple length");
        *self.amps.entry(occupation).or_insert(cr(0.0)) += amp;
    }

    /// Adds `weight` times a state with `single` in `mode` and vacuum elsewhere.
    pub fn add_single_mode(&mut self, mode: usize, single: &[C64], weight: C64) {
        for (n, a) in single.iter().enumerate() {
            if *a == cr(0.0) {
                continue;
            }
            let mut occ = vec![0; self.modes];
            occ[mode] = n as u32;
            self.add(occ, weight * a);
        }
    }

    pub fn amplitude(&self, occupation: &[u32]) -> C64 {
        self.amps.get(occupation).copied().unwrap_or(cr(0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, &C64)> {
        self.amps.iter()
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        let mut out = self.clone();
        out.amps.values_mut().for_each(|a| *a /= n);
        out
    }

    /// Amplitudes in key order, for dense routines.
    pub fn amplitudes(&self) -> Vec<C64> {
        self.amps.values().copied().collect()
    }

    /// Applies a diagonal operator given as a function of the occupation tuple.
    pub fn diagonal(&self, f: impl Fn(&[u32]) -> C64) -> Vec<C64> {
        self.amps.iter().map(|(k, a)| f(k) * a).collect()
    }

    /// Product state of two single-mode vectors.
    pub fn product(a: &[C64], b: &[C64]) -> Self {
        let mut s = MultimodeState::new(2);
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let v = x * y;
                if v != cr(0.0) {
                    s.add(vec![i as u32, j as u32], v);
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{inner, vec_norm};

    #[test]
    fn ladder_relations() {
        let n = 12;
        let a = annihilation(n);
        let comm = a.commutator(&creation(n));
        for k in 0..n - 1 {
            assert!((comm[(k, k)] - cr(1.0)).norm() < 1e-14);
        }
        assert!((&creation(n) * &a).max_abs_diff(&number(n)) < 1e-14);
    }

    #[test]
    fn coherent_state_moments() {
        let alpha = C64::from_polar(1.3, 0.4);
        let cut = adaptive_cutoff(coherent_population(alpha), 1e-14).unwrap();
        let psi = coherent(alpha, cut + 5);
        assert!((vec_norm(&psi) - 1.0).abs() < 1e-12);
        let a_psi = annihilation(cut + 5).mul_vec(&psi);
        assert!((inner(&psi, &a_psi) - alpha).norm() < 1e-10);
        assert_eq!(coherent(cr(0.0), 3), vec![cr(1.0), cr(0.0), cr(0.0)]);
    }

    #[test]
    fn squeezed_vacuum_variance() {
        let r = 0.5;
        let cut = adaptive_cutoff(squeezed_population(r), 1e-14).unwrap();
        let dim = cut + 4;
        let psi = squeezed_vacuum(r, dim);
        assert!((vec_norm(&psi) - 1.0).abs() < 1e-10);
        let a = annihilation(dim);
        let q = (&a + &a.adjoint()).scale_real(0.5f64.sqrt());
        let qq = inner(&psi, &(&q * &q).mul_vec(&psi)).re;
        assert!((qq - 0.5 * (-2.0 * r).exp()).abs() < 1e-9);
    }

    #[test]
    fn thermal_sums_to_one() {
        let p = thermal_populations(0.7, 80);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let mean: f64 = p.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
        assert!((mean - 0.7).abs() < 1e-9);
    }

    #[test]
    fn cutoff_cap_reported() {
        assert!(adaptive_cutoff(|_| 0.0, 1e-10).is_err());
    }

    #[test]
    fn multimode_bookkeeping() {
        let mut s = MultimodeState::new(3);
        s.add(vec![1, 0, 0], cr(1.0));
        s.add_single_mode(2, &[cr(0.0), cr(0.0), cr(1.0)], cr(1.0));
        s.add(vec![1, 0, 0], cr(1.0));
        assert_eq!(s.len(), 2);
        assert_eq!(s.amplitude(&[1, 0, 0]), cr(2.0));
        let n = s.normalized();
        assert!((n.norm() - 1.0).abs() < 1e-15);
        let p = MultimodeState::product(&[cr(0.6), cr(0.8)], &[cr(1.0)]);
        assert_eq!(p.amplitudes(), vec![cr(0.6), cr(0.8)]);
    }
}
