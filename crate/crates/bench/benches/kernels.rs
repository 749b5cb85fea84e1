use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use thermpeps::ctmrg::{bond_environment, ctm_step, CtmConfig};
use thermpeps::finite::contract_grid;
use thermpeps::peps::transfer_tensor_a;
use thermpeps::{contract, symm_eig};
use thermpeps_bench::{bond_inputs, environment, filled, grid, symmetric};

fn ctm(c: &mut Criterion) {
    let mut g = c.benchmark_group("ctm_step");
    for (d, m) in [(3, 16), (4, 16), (4, 24)] {
        let (a, env) = environment(d, m);
        let ta = transfer_tensor_a(&a).unwrap();
        let cfg = CtmConfig::new(m, 1e-9, 1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(format!("D{d}_M{m}")), &(), |b, _| {
            b.iter(|| ctm_step(black_box(&env), &ta, &cfg).unwrap())
        });
    }
    g.finish();
}

fn eig(c: &mut Criterion) {
    let mut g = c.benchmark_group("symm_eig");
    for n in [36, 144, 576] {
        let m = symmetric(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| symm_eig(black_box(m)).unwrap())
        });
    }
    g.finish();
}

fn contraction(c: &mut Criterion) {
    // corner-transfer-transfer product as in the corner enlargement
    let mut g = c.benchmark_group("contract");
    for (m, q) in [(16, 36), (24, 36), (16, 81)] {
        let corner = filled(&[m, m], 0.1);
        let top = filled(&[m, q, m], 0.2);
        g.bench_with_input(BenchmarkId::from_parameter(format!("M{m}_q{q}")), &(), |b, _| {
            b.iter(|| contract(black_box(&corner), black_box(&top), &[(1, 0)]).unwrap())
        });
    }
    g.finish();
}

fn bond_env(c: &mut Criterion) {
    let mut g = c.benchmark_group("bond_environment");
    g.sample_size(20);
    for (d, m) in [(2, 16), (3, 16)] {
        let (env, left, right) = bond_inputs(d, m);
        g.bench_with_input(BenchmarkId::from_parameter(format!("D{d}_M{m}")), &(), |b, _| {
            b.iter(|| bond_environment(black_box(&env), &left, &right).unwrap())
        });
    }
    g.finish();
}

fn boundary_mps(c: &mut Criterion) {
    let mut g = c.benchmark_group("boundary_mps");
    g.sample_size(20);
    for (n, chi, m) in [(6, 4, 16), (8, 4, 16), (8, 9, 16)] {
        let net = grid(n, chi);
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{n}x{n}_chi{chi}_M{m}")),
            &net,
            |b, net| b.iter(|| contract_grid(black_box(net), m).unwrap()),
        );
    }
    g.finish();
}

criterion_group!(benches, ctm, eig, contraction, bond_env, boundary_mps);
criterion_main!(benches);
