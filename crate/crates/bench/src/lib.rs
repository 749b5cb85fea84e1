//! Deterministic inputs shared by the benchmarks.

use thermpeps::ctmrg::{converge_env, CtmConfig, Environment};
use thermpeps::finite::Grid;
use thermpeps::peps::{absorb_trotter, dihedral_average, transfer_tensor_a, transfer_tensor_b, Direction};
use thermpeps::renorm::renormalize;
use thermpeps::{Isometry, PepsTensor, Tensor, TrotterTensor};

/// Smooth pseudo-random entries in `[0.7, 1.3]`.
pub fn filled(dims: &[usize], seed: f64) -> Tensor {
    let mut k = 0.0;
    Tensor::from_fn(dims, |_| {
        k += 1.0;
        1.0 + 0.3 * (seed + 12.9898 * k).sin()
    })
}

/// Reflection-symmetric site tensor of bond dimension `d`.
pub fn site(d: usize) -> PepsTensor {
    let t = dihedral_average(&filled(&[2, 2, d, d, d, d], 0.5), 2).unwrap();
    PepsTensor::new(t).unwrap()
}

pub fn symmetric(n: usize) -> Tensor {
    let m = filled(&[n, n], 1.5);
    let mut s = m.transpose().unwrap();
    s.axpy(1.0, &m).unwrap();
    s
}

/// Converged environment of a `d`-site tensor at dimension `m`.
pub fn environment(d: usize, m: usize) -> (PepsTensor, Environment) {
    let a = site(d);
    let env = converge_env(
        &transfer_tensor_a(&a).unwrap(),
        &CtmConfig::new(m, 1e-9, 2000).unwrap(),
        None,
    )
    .unwrap();
    (a, env)
}

/// Inputs of the bond environment after one gate: converged environment of
/// the truncated tensor and the two open-leg transfer tensors.
pub fn bond_inputs(d: usize, m: usize) -> (Environment, Tensor, Tensor) {
    let a = site(d);
    let b = absorb_trotter(&a, &TrotterTensor::new(0.05).unwrap()).unwrap();
    let w = Isometry::new(Tensor::from_fn(&[2 * d, d], |ix| (ix[0] == ix[1]) as u8 as f64)).unwrap();
    let a2 = renormalize(&b, &w).unwrap();
    let env = converge_env(
        &transfer_tensor_a(&a2).unwrap(),
        &CtmConfig::new(m, 1e-9, 2000).unwrap(),
        None,
    )
    .unwrap();
    let left = transfer_tensor_b(&a2, &b, w.matrix(), Direction::Right).unwrap();
    let right = transfer_tensor_b(&a2, &b, w.matrix(), Direction::Left).unwrap();
    (env, left, right)
}

/// `n x n` network of positive cells with inner bonds of extent `chi`.
pub fn grid(n: usize, chi: usize) -> Grid {
    let cells = (0..n * n)
        .map(|s| {
            let (r, c) = (s / n, s % n);
            let ext = |edge: bool| if edge { 1 } else { chi };
            filled(&[ext(r == 0), ext(c == n - 1), ext(r == n - 1), ext(c == 0)], s as f64)
        })
        .collect();
    Grid::new(n, n, cells).unwrap()
}
