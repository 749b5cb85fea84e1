//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thermpeps::tensor::{contract, svd, Tensor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_fn(&[rows, cols], |_| rng.random_range(-1.0..1.0))
}

pub fn random_symmetric(rng: &mut impl Rng, n: usize) -> Tensor {
    let m = random_matrix(rng, n, n);
    let mut s = m.transpose().unwrap();
    s.axpy(1.0, &m).unwrap();
    s.scaled(0.5)
}

/// Closest matrix with orthonormal columns, `U V^T` of the thin SVD.
pub fn polar(m: &Tensor) -> Tensor {
    let f = svd(m).unwrap();
    contract(&f.u, &f.v, &[(1, 1)]).unwrap()
}

/// `Q^T E Q`, traced.
pub fn trace_form(e: &Tensor, q: &Tensor) -> f64 {
    let eq = contract(e, q, &[(1, 0)]).unwrap();
    eq.dot(q).unwrap()
}
