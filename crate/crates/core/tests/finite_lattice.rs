//! Open finite lattices contracted with boundary MPSs.

mod common;

use rand::Rng;
use thermpeps::checkpoint::FiniteCheckpoint;
use thermpeps::evolution::Schedule;
use thermpeps::finite::{
    contract_grid, evolve_finite, finite_bond_environment, finite_step, lattice_bonds, overlap, BoundaryMps,
    CorrelatorRow, FiniteEvolutionConfig, FiniteLattice, FiniteState, Grid, NullFiniteSink, SweepConfig,
    CORRELATOR_HEADER,
};
use thermpeps::ising::{ModelParams, TrotterTensor, H0};
use thermpeps::renorm::Isometry;
use thermpeps::tensor::Tensor;

fn grown(n: usize, m_mps: usize) -> FiniteLattice {
    let mut lat = FiniteLattice::initial(n, m_mps).unwrap();
    let params = ModelParams::new(2.0, 0.1, 0.2).unwrap();
    finite_step(
        &mut lat,
        &params,
        &SweepConfig {
            d: 2,
            tol_w: 1e-10,
            max_sweeps: 100,
        },
    )
    .unwrap();
    lat
}

#[test]
fn two_by_two_norm_is_exact() {
    let lat = grown(2, 16);
    let psi = lat.state_vector().unwrap();
    let (v, log) = lat.norm().unwrap();
    let want = overlap(&psi, &psi);
    assert!((v * log.exp() - want).abs() < 1e-12 * want);
}

fn random_grid(n: usize, bond: usize, seed: u64) -> Grid {
    let mut r = common::rng(seed);
    let mut cells = Vec::new();
    for row in 0..n {
        for c in 0..n {
            let dims = [
                if row == 0 { 1 } else { bond },
                if c + 1 == n { 1 } else { bond },
                if row + 1 == n { 1 } else { bond },
                if c == 0 { 1 } else { bond },
            ];
            cells.push(Tensor::from_fn(&dims, |_| r.random_range(0.0..1.0)));
        }
    }
    Grid::new(n, n, cells).unwrap()
}

#[test]
fn norm_settles_as_the_boundary_bond_grows() {
    let g = random_grid(4, 4, 1);
    let (v, l) = contract_grid(&g, 256).unwrap();
    let exact = v.ln() + l;
    let mut errs = Vec::new();
    for m in [1, 2, 4, 8, 16, 64] {
        let (v, l) = contract_grid(&g, m).unwrap();
        errs.push((v.ln() + l - exact).abs());
    }
    println!("log-norm error by M_mps: {errs:?}");
    assert!(*errs.last().unwrap() < 1e-12);
    // the last row absorption discards less with a wider boundary
    let disc = |m| {
        let mut mps = BoundaryMps::trivial(4);
        for r in 0..3 {
            let row: Vec<Tensor> = (0..4).map(|c| g.cell(r, c).clone()).collect();
            mps.absorb_row(&row, m).unwrap();
        }
        *mps.truncation_errors().last().unwrap()
    };
    assert!(disc(2) >= disc(8) && disc(8) >= disc(64));
}

#[test]
fn corner_and_center_bonds_see_different_environments() {
    let lat = grown(5, 32);
    let b = lat.absorb(&TrotterTensor::new(0.1).unwrap()).unwrap();
    let w: Vec<Isometry> = lat
        .isometries()
        .iter()
        .map(|_| Isometry::embedding(2, 2, 2).unwrap())
        .collect();
    let bonds = lattice_bonds(5);
    let corner = bonds
        .iter()
        .position(|x| x.horizontal && x.ends() == ((0, 0), (0, 1)))
        .unwrap();
    let center = bonds
        .iter()
        .position(|x| x.horizontal && x.ends() == ((2, 1), (2, 2)))
        .unwrap();
    let unit = |k| {
        let (e, _) = finite_bond_environment(&lat, &b, &w, k).unwrap();
        let m = e.matrix().clone();
        let tr: f64 = (0..4).map(|i| m.get(&[i, i])).sum();
        m.scaled(1.0 / tr)
    };
    let (ec, em) = (unit(corner), unit(center));
    assert!(ec.max_diff(&em) > 1e-3, "{}", ec.max_diff(&em));
}

#[test]
fn checkpoint_file_round_trip() {
    let lat = grown(3, 8);
    let ck = FiniteCheckpoint {
        h: 2.0,
        delta: 0.1,
        d: 2,
        state: FiniteState {
            step: 1,
            beta: 0.2,
            lattice: lat,
        },
        rows: vec![CorrelatorRow {
            beta: 0.2,
            site1: (0, 0),
            site2: (2, 1),
            value: 0.125,
        }],
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("finite.ckpt");
    ck.save(&path).unwrap();
    let back = FiniteCheckpoint::load(&path).unwrap();
    assert_eq!(back.rows, ck.rows);
    assert_eq!(
        (back.h, back.delta, back.d, back.state.step, back.state.beta),
        (2.0, 0.1, 2, 1, 0.2)
    );
    for (a, b) in back.state.lattice.sites().iter().zip(ck.state.lattice.sites()) {
        assert_eq!(a.tensor(), b.tensor());
    }
    for (a, b) in back
        .state
        .lattice
        .isometries()
        .iter()
        .zip(ck.state.lattice.isometries())
    {
        assert_eq!(a.matrix(), b.matrix());
    }
    std::fs::write(&path, b"garbage").unwrap();
    assert!(FiniteCheckpoint::load(&path).is_err());
}

#[test]
fn correlator_rows_use_zero_based_sites() {
    let row = CorrelatorRow {
        beta: 0.5,
        site1: (2, 2),
        site2: (8, 8),
        value: -0.25,
    };
    assert_eq!(CORRELATOR_HEADER, "beta,site1,site2,value");
    let line = row.csv_row();
    let fields: Vec<&str> = line.split(',').collect();
    assert_eq!(fields[1..3], ["2:2", "8:8"]);
    assert_eq!(fields[0].parse::<f64>().unwrap(), 0.5);
    assert_eq!(fields[3].parse::<f64>().unwrap(), -0.25);
}

/// Diagonal correlator on 11x11 for two (D, M_mps) settings. Takes hours.
#[test]
#[ignore]
fn eleven_by_eleven_correlator_converges() {
    let run = |d: usize, m_mps: usize| {
        let cfg = FiniteEvolutionConfig {
            n: 11,
            h: 2.0 / 3.0 * H0,
            delta: 0.0,
            sweep: SweepConfig {
                d,
                tol_w: 1e-7,
                max_sweeps: 200,
            },
            m_mps,
            schedule: Schedule::constant(0.01, 1.0).unwrap(),
            pairs: vec![((2, 2), (8, 8))],
            sample_stride: 10,
            checkpoint_stride: 0,
        };
        evolve_finite(&cfg, &mut NullFiniteSink, None).unwrap()
    };
    let base = run(5, 16);
    let wide = run(6, 24);
    for (a, b) in base.iter().zip(&wide) {
        assert!(
            (a.value - b.value).abs() < 1e-2,
            "beta {}: {} vs {}",
            a.beta,
            a.value,
            b.value
        );
    }
}
