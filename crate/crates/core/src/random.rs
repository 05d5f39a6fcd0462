//! Seeded random states and operators for property tests and benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::{matrix_exp, normalized, CMatrix, Matrix, C64};
use crate::states::DensityMatrix;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal(rng: &mut Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// dim×cols matrix of i.i.d. complex normal entries.
pub fn ginibre(rng: &mut Rng, rows: usize, cols: usize) -> CMatrix {
    Matrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// G G† / Tr(G G†) with G of shape dim × rank.
pub fn random_density_matrix(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    let mut r = rng(seed);
    random_density_matrix_with(&mut r, dim, rank)
}

pub fn random_density_matrix_with(rng: &mut Rng, dim: usize, rank: usize) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(Error::domain(format!("rank {rank} outside 1..={dim}")));
    }
    let g = ginibre(rng, dim, rank);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    Ok(DensityMatrix::new_trusted(m.scale_real(1.0 / tr)))
}

pub fn random_pure_state(rng: &mut Rng, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| complex_normal(rng)).collect();
    normalized(&v)
}

/// Hermitian matrix (G + G†)/2 with standard complex normal G.
pub fn random_hermitian(rng: &mut Rng, dim: usize) -> CMatrix {
    ginibre(rng, dim, dim).hermitian_part()
}

/// exp(-iH) for a random Hermitian H.
pub fn random_unitary(rng: &mut Rng, dim: usize) -> CMatrix {
    let h = random_hermitian(rng, dim);
    matrix_exp(&h.scale(C64::new(0.0, -1.0))).expect("square input")
}
