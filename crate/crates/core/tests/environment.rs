//! Corner environments of infinite networks.

mod common;

use common::{polar, random_matrix, rng};
use rand::Rng;
use thermpeps::ctmrg::{bond_environment, column_transfer, converge_env, left_column, CtmConfig};
use thermpeps::evolution::{second_order_step, EvolutionConfig, EvolutionState, Schedule};
use thermpeps::ising::{pauli_x, pauli_z, TrotterTensor, BETA0};
use thermpeps::observables::{
    classical_environment, classical_ising_tensor, local_expectation, onsager_exact_magnetization,
};
use thermpeps::peps::{absorb_trotter, initial_tensor, transfer_tensor_a, transfer_tensor_b, Direction, PepsTensor};
use thermpeps::renorm::{renormalize, Isometry};
use thermpeps::tensor::Tensor;

fn random_isotropic(d: usize, seed: u64) -> PepsTensor {
    let mut r = rng(seed);
    PepsTensor::new(Tensor::from_fn(&[2, 2, d, d, d, d], |_| r.random_range(-1.0..1.0)))
        .unwrap()
        .symmetrized()
        .unwrap()
}

#[test]
fn onsager_magnetization_at_m16() {
    let beta = 1.2 * BETA0;
    let a = classical_ising_tensor(beta).unwrap();
    let env = classical_environment(&a, &CtmConfig::new(16, 1e-11, 3000).unwrap()).unwrap();
    let m = local_expectation(&a, &env, &pauli_z()).unwrap();
    assert!((m - onsager_exact_magnetization(beta)).abs() < 1e-4, "{m}");
}

#[test]
fn observables_settle_in_m() {
    let beta = 1.2 * BETA0;
    let a = classical_ising_tensor(beta).unwrap();
    let at = |m| {
        let env = classical_environment(&a, &CtmConfig::new(m, 1e-12, 3000).unwrap()).unwrap();
        (
            local_expectation(&a, &env, &pauli_z()).unwrap(),
            local_expectation(&a, &env, &pauli_x()).unwrap(),
        )
    };
    let (z8, x8) = at(8);
    let (z16, x16) = at(16);
    assert!(
        (z8 - z16).abs() < 1e-5 && (x8 - x16).abs() < 1e-5,
        "{z8} {z16} {x8} {x16}"
    );
}

#[test]
fn corner_spectrum_of_thermal_states_is_nonnegative() {
    let ctm = CtmConfig::new(12, 1e-10, 3000).unwrap();
    let cfg = EvolutionConfig {
        h: 2.0293,
        delta: 1e-6,
        d: 3,
        ctm,
        tol_w: 1e-9,
        max_outer: 50,
        env_max_sweeps: None,
        schedule: Schedule::constant(0.05, 0.3).unwrap(),
        sample_stride: 1,
        checkpoint_stride: 0,
    };
    let mut st = EvolutionState::initial(&ctm).unwrap();
    let mut tensors = vec![
        classical_ising_tensor(0.3).unwrap(),
        classical_ising_tensor(0.6).unwrap(),
    ];
    for _ in 0..6 {
        second_order_step(&mut st, 0.05, &cfg).unwrap();
    }
    tensors.push(st.a.clone());
    for a in tensors {
        let env = classical_environment(&a, &ctm).unwrap();
        let s = env.spectrum();
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!(s.iter().all(|&x| x > -1e-10), "{s:?}");
    }
}

#[test]
fn warm_start_is_recorded() {
    let a = random_isotropic(2, 4);
    let cfg = CtmConfig::new(12, 1e-10, 3000).unwrap();
    let env = converge_env(&transfer_tensor_a(&a).unwrap(), &cfg, None).unwrap();
    let mut t = a.tensor().clone();
    t.data_mut()[5] += 1e-3;
    let near = PepsTensor::new(t).unwrap().symmetrized().unwrap();
    let ta = transfer_tensor_a(&near).unwrap();
    let cold = converge_env(&ta, &cfg, None).unwrap().iterations();
    let warm = converge_env(&ta, &cfg, Some(env)).unwrap().iterations();
    println!("cold start {cold} iterations, warm start {warm}");
}

/// Two-site window `L a a L` with the same environment.
fn window_value(a: &Tensor, env: &thermpeps::ctmrg::Environment) -> f64 {
    let l = left_column(env).unwrap();
    let h = column_transfer(env, &column_transfer(env, &l, a).unwrap(), a).unwrap();
    h.dot(&l).unwrap()
}

#[test]
fn bond_environment_closes_to_the_window_norm() {
    for (d, seed) in [(1usize, 0u64), (2, 1)] {
        let a = if d == 1 {
            initial_tensor()
        } else {
            random_isotropic(2, seed)
        };
        let b = absorb_trotter(&a, &TrotterTensor::new(0.2).unwrap()).unwrap();
        let mut r = rng(seed + 10);
        for _ in 0..3 {
            let w = Isometry::new(polar(&random_matrix(&mut r, 2 * d, d))).unwrap();
            let a_prime = renormalize(&b, &w).unwrap();
            let ta = transfer_tensor_a(&a_prime).unwrap();
            let env = converge_env(&ta, &CtmConfig::new(8, 1e-11, 3000).unwrap(), None).unwrap();
            let bl = transfer_tensor_b(&a_prime, &b, w.matrix(), Direction::Right).unwrap();
            let br = transfer_tensor_b(&a_prime, &b, w.matrix(), Direction::Left).unwrap();
            let e = bond_environment(&env, &bl, &br).unwrap();
            assert_eq!(e.matrix().dims(), &[2 * d, 2 * d]);
            let want = window_value(ta.tensor(), &env);
            let got = e.merit(&w);
            assert!((got - want).abs() < 1e-12 * want.abs(), "D={d}: {got} vs {want}");
            // any isometry, not just the one A' was built with, closes through
            // the symmetric part only
            let v = Isometry::new(polar(&random_matrix(&mut r, 2 * d, d))).unwrap();
            let et = e.matrix().transpose().unwrap();
            assert!((et.dot(&v.projector()).unwrap() - e.merit(&v)).abs() < 1e-13 * want.abs());
        }
    }
}

#[test]
fn bond_environment_settles_in_m() {
    let a = random_isotropic(2, 6);
    let b = absorb_trotter(&a, &TrotterTensor::new(0.1).unwrap()).unwrap();
    let w = Isometry::embedding(2, 2, 2).unwrap();
    let a_prime = renormalize(&b, &w).unwrap();
    let ta = transfer_tensor_a(&a_prime).unwrap();
    let bl = transfer_tensor_b(&a_prime, &b, w.matrix(), Direction::Right).unwrap();
    let br = transfer_tensor_b(&a_prime, &b, w.matrix(), Direction::Left).unwrap();
    let mut prev: Option<Tensor> = None;
    let mut diffs = Vec::new();
    for m in [4, 8, 16, 24] {
        let env = converge_env(&ta, &CtmConfig::new(m, 1e-12, 5000).unwrap(), None).unwrap();
        let e = bond_environment(&env, &bl, &br).unwrap().matrix().clone();
        let tr: f64 = (0..4).map(|i| e.get(&[i, i])).sum();
        let e = e.scaled(1.0 / tr);
        if let Some(p) = &prev {
            diffs.push(e.max_diff(p));
        }
        prev = Some(e);
    }
    println!("E change with M: {diffs:?}");
    assert!(*diffs.last().unwrap() < 1e-6, "{diffs:?}");
}
