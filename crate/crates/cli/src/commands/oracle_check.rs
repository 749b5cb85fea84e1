use std::io::Write;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermpeps::ctmrg::procrustes;
use thermpeps::finite::{finite_step, overlap, FiniteLattice, SweepConfig};
use thermpeps::oracle::{
    apply_zz_gate, dense_expm, kron, purified_expectation, purified_initial, trotter_step, Geometry, ThermalEd,
};
use thermpeps::renorm::{optimize_isometry, BondEnvironment, EnvSource, Isometry};
use thermpeps::tensor::{contract, matmul, svd, Tensor};
use thermpeps::{pauli_x, pauli_z, ModelParams, TrotterTensor, H0};

use super::{execute, Common};
use crate::config::parse_lattice;
use crate::error::CliError;
use crate::run::RunDir;

pub const CHECKS_FILE: &str = "checks.csv";

#[derive(Args, Clone, Debug)]
pub struct Opts {
    #[command(flatten)]
    pub common: Common,
    /// Lattice `NxN`; the dense oracles cap it at 3x3.
    #[arg(long)]
    pub lattice: Option<String>,
    /// Step for the gate and trajectory checks.
    #[arg(long)]
    pub dbeta: Option<f64>,
    /// Final inverse temperature of the thermal comparison.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "D")]
    pub d: Option<usize>,
    /// Seed of the random-matrix checks.
    #[arg(long)]
    pub seed: Option<u64>,
}

struct Check {
    name: &'static str,
    value: f64,
    tol: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value <= self.tol
    }
}

fn polar(m: &Tensor) -> thermpeps::Result<Tensor> {
    let f = svd(m)?;
    contract(&f.u, &f.v, &[(1, 1)])
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
    Tensor::from_fn(&[r, c], |_| rng.random_range(-1.0..1.0))
}

/// Bond gate assembled from two Trotter tensors, against `exp(dbeta/2 ZZ)`.
fn gate(dbeta: f64) -> thermpeps::Result<f64> {
    let t = TrotterTensor::new(dbeta)?;
    let one_leg = |keep: usize| -> thermpeps::Result<Tensor> {
        let mut x = t.tensor().clone();
        for ax in (2..6).filter(|&a| a != keep) {
            x = x.slice_axis(ax, 0..1)?;
        }
        x.reshape(&[2, 2, 2])
    };
    let g = contract(&one_leg(3)?, &one_leg(5)?, &[(2, 2)])?
        .permute(&[0, 2, 1, 3])?
        .reshape(&[4, 4])?;
    let g = g.scaled((0.5 * dbeta).cosh().powi(-3));
    Ok(g.max_diff(&dense_expm(&kron(&pauli_z(), &pauli_z()).scaled(0.5 * dbeta))))
}

/// One interaction gate, untruncated: relative norm error and `1 - fidelity`.
fn gated_state(n: usize, dbeta: f64) -> thermpeps::Result<(f64, f64)> {
    let lat = FiniteLattice::initial(n, 64)?;
    let b = lat.absorb(&TrotterTensor::new(dbeta)?)?;
    let eye = vec![Isometry::new(Tensor::eye(2))?; 2 * n * (n - 1)];
    let gated = lat.projected(&b, &eye)?;
    let (v, log) = gated.norm()?;
    let geom = Geometry::square(n);
    let phi = apply_zz_gate(&purified_initial(geom)?, geom, dbeta);
    let norm = overlap(&phi, &phi);
    let psi = gated.state_vector()?;
    let fid = overlap(&psi, &phi) / (overlap(&psi, &psi) * norm).sqrt();
    Ok(((v * log.exp() / norm - 1.0).abs(), 1.0 - fid))
}

/// Two untruncated second-order steps against the state-vector oracle.
fn two_steps(n: usize, h: f64, dbeta: f64) -> thermpeps::Result<f64> {
    let params = ModelParams::new(h, 0.0, dbeta)?;
    let mut lat = FiniteLattice::initial(n, 256)?;
    let cfg = SweepConfig {
        d: 4,
        tol_w: 1e-12,
        max_sweeps: 200,
    };
    let geom = Geometry::square(n);
    let mut psi = purified_initial(geom)?;
    for _ in 0..2 {
        finite_step(&mut lat, &params, &cfg)?;
        psi = trotter_step(&psi, geom, &params);
    }
    let last = n * n - 1;
    let ops = [
        vec![(0, pauli_x())],
        vec![(0, pauli_z()), (last, pauli_z())],
        vec![(0, pauli_z()), (1, pauli_z())],
    ];
    let mut worst = 0.0f64;
    for o in &ops {
        worst = worst.max((lat.expectation(o)? - purified_expectation(&psi, n * n, o)).abs());
    }
    Ok(worst)
}

/// Trajectory against the exact thermal state, sampled every 0.1.
fn thermal(n: usize, h: f64, d: usize, dbeta: f64, beta: f64) -> thermpeps::Result<f64> {
    let params = ModelParams::new(h, 0.0, dbeta)?;
    let mut lat = FiniteLattice::initial(n, 64)?;
    let cfg = SweepConfig {
        d,
        tol_w: 1e-8,
        max_sweeps: 200,
    };
    let last = n * n - 1;
    let ops = [
        vec![(0, pauli_x())],
        vec![(0, pauli_z()), (last, pauli_z())],
        vec![(0, pauli_z()), (1, pauli_z())],
    ];
    let steps = (beta / dbeta).round() as usize;
    let every = ((0.1 / dbeta).round() as usize).max(1);
    let mut worst = 0.0f64;
    for k in 1..=steps {
        finite_step(&mut lat, &params, &cfg)?;
        if k % every == 0 || k == steps {
            let ed = ThermalEd::new(Geometry::square(n), h, 0.0, k as f64 * dbeta)?;
            for o in &ops {
                worst = worst.max((lat.expectation(o)? - ed.expectation(o)).abs());
            }
        }
    }
    Ok(worst)
}

/// Best random isometry minus the optimal merit (non-positive when optimal).
fn dominance(rng: &mut ChaCha8Rng) -> thermpeps::Result<f64> {
    let m = random_matrix(rng, 6, 6);
    let mut e = m.transpose()?;
    e.axpy(1.0, &m)?;
    let env = BondEnvironment::new(e.scaled(0.5), EnvSource::Infinite)?;
    let opt = optimize_isometry(&env, 3)?;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        best = best.max(env.merit(&Isometry::new(polar(&random_matrix(rng, 6, 3))?)?));
    }
    Ok(best - opt.merit)
}

/// Gauge recovered from a rotated isometry.
fn procrustes_error(rng: &mut ChaCha8Rng) -> thermpeps::Result<f64> {
    let mut worst = 0.0f64;
    for d in 2..=4 {
        let w = polar(&random_matrix(rng, 2 * d, d))?;
        let q = polar(&random_matrix(rng, d, d))?;
        worst = worst.max(procrustes(&w, &matmul(&w, &q)?)?.max_diff(&q));
    }
    Ok(worst)
}

pub fn run(o: Opts) -> Result<(), CliError> {
    let mut c = o.common.base_config()?;
    c.set("lattice", o.lattice.as_ref());
    c.set("dbeta", o.dbeta);
    c.set("beta", o.beta);
    c.set("D", o.d);
    c.set("seed", o.seed);
    c.set_default("lattice", "2x2");
    c.set_default("dbeta", 0.01);
    c.set_default("beta", 0.5);
    c.set_default("D", 4);
    c.set_default("seed", 0);
    c.check_keys(&["lattice", "dbeta", "beta", "D", "seed"])?;
    let n = parse_lattice(c.raw("lattice").unwrap())?;
    let (dbeta, beta, d, seed): (f64, f64, usize, u64) = (
        c.require("dbeta")?,
        c.require("beta")?,
        c.require("D")?,
        c.require("seed")?,
    );
    if n < 2 {
        return Err(CliError::Config("lattice side must be at least 2".into()));
    }
    ModelParams::new(1.0, 0.0, dbeta)?;
    if !(beta >= dbeta) || d == 0 {
        return Err(CliError::Config("need beta >= dbeta and D >= 1".into()));
    }
    let h = 2.0 / 3.0 * H0;

    let dir = RunDir::create("oracle-check", c, o.common.out.as_deref())?;
    execute(dir, |dir| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (norm_err, infidelity) = dir.timed("gated-state", |_| Ok(gated_state(n, dbeta)?))?;
        let checks = [
            Check {
                name: "bond-gate",
                value: gate(dbeta)?,
                tol: 1e-12,
            },
            Check {
                name: "gated-norm",
                value: norm_err,
                tol: 1e-10,
            },
            Check {
                name: "gated-state",
                value: infidelity,
                tol: 1e-12,
            },
            Check {
                name: "two-steps",
                value: dir.timed("two-steps", |_| Ok(two_steps(n, h, dbeta)?))?,
                tol: 1e-8,
            },
            Check {
                name: "thermal",
                value: dir.timed("thermal", |_| Ok(thermal(n, h, d, dbeta, beta)?))?,
                tol: 1e-3,
            },
            Check {
                name: "isometry-dominance",
                value: dominance(&mut rng)?,
                tol: 0.0,
            },
            Check {
                name: "procrustes",
                value: procrustes_error(&mut rng)?,
                tol: 1e-12,
            },
        ];
        let mut csv = dir.csv(CHECKS_FILE, "check,value,tolerance,pass")?;
        for k in &checks {
            println!(
                "{} {}: {:.3e} (tol {:e})",
                if k.pass() { "PASS" } else { "FAIL" },
                k.name,
                k.value,
                k.tol
            );
            writeln!(csv, "{},{:.6e},{:e},{}", k.name, k.value, k.tol, k.pass())?;
        }
        csv.flush()?;
        match checks.iter().filter(|k| !k.pass()).count() {
            0 => Ok(()),
            f => Err(CliError::ChecksFailed(f)),
        }
    })
}
