//! Imaginary-time trajectory on a finite lattice with correlator sampling.

use super::{finite_step, FiniteLattice, SweepConfig};
use crate::checkpoint::FiniteCheckpoint;
use crate::error::{Error, Result};
use crate::evolution::Schedule;
use crate::ising::{pauli_z, ModelParams};
use log::info;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteEvolutionConfig {
    /// Lattice side.
    pub n: usize,
    pub h: f64,
    pub delta: f64,
    pub sweep: SweepConfig,
    pub m_mps: usize,
    pub schedule: Schedule,
    /// Site pairs `((r1, c1), (r2, c2))` whose `<Z Z>` is recorded.
    pub pairs: Vec<((usize, usize), (usize, usize))>,
    /// Correlators are recorded every this many steps (and after the last).
    pub sample_stride: usize,
    /// Checkpoints every this many steps; 0 disables them.
    pub checkpoint_stride: usize,
}

impl FiniteEvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        ModelParams::new(self.h, self.delta, 1.0)?;
        self.sweep.validate()?;
        if self.n < 2 || self.m_mps == 0 || self.sample_stride == 0 {
            return Err(Error::InvalidArgument(format!(
                "need N >= 2, M_mps >= 1 and a positive sample stride (N={}, M_mps={}, stride={})",
                self.n, self.m_mps, self.sample_stride
            )));
        }
        for &(a, b) in &self.pairs {
            if a.0 >= self.n || a.1 >= self.n || b.0 >= self.n || b.1 >= self.n || a == b {
                return Err(Error::InvalidArgument(format!(
                    "bad site pair {a:?}-{b:?} on a {0}x{0} lattice",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// One row of the correlator CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelatorRow {
    pub beta: f64,
    pub site1: (usize, usize),
    pub site2: (usize, usize),
    /// `<Z_1 Z_2>`.
    pub value: f64,
}

pub const CORRELATOR_HEADER: &str = "beta,site1,site2,value";

impl CorrelatorRow {
    /// Sites are written as `row:col`, counted from 0.
    pub fn csv_row(&self) -> String {
        format!(
            "{:.12},{}:{},{}:{},{:.15e}",
            self.beta, self.site1.0, self.site1.1, self.site2.0, self.site2.1, self.value
        )
    }
}

#[derive(Clone, Debug)]
pub struct FiniteState {
    pub step: usize,
    pub beta: f64,
    pub lattice: FiniteLattice,
}

pub trait FiniteSink {
    fn sample(&mut self, _rows: &[CorrelatorRow]) -> Result<()> {
        Ok(())
    }

    fn checkpoint(&mut self, _ck: &FiniteCheckpoint) -> Result<()> {
        Ok(())
    }
}

pub struct NullFiniteSink;

impl FiniteSink for NullFiniteSink {}

/// `<Z_1 Z_2>` for every configured pair.
pub fn sample_correlators(
    lat: &FiniteLattice,
    beta: f64,
    pairs: &[((usize, usize), (usize, usize))],
) -> Result<Vec<CorrelatorRow>> {
    let n = lat.n();
    pairs
        .iter()
        .map(|&(a, b)| {
            let value = lat.expectation(&[(a.0 * n + a.1, pauli_z()), (b.0 * n + b.1, pauli_z())])?;
            Ok(CorrelatorRow {
                beta,
                site1: a,
                site2: b,
                value,
            })
        })
        .collect()
}

/// Runs the schedule from `beta = 0`, or from `resume`.
pub fn evolve_finite(
    cfg: &FiniteEvolutionConfig,
    sink: &mut dyn FiniteSink,
    resume: Option<FiniteCheckpoint>,
) -> Result<Vec<CorrelatorRow>> {
    cfg.validate()?;
    let steps = cfg.schedule.steps();
    let (mut state, mut rows) = match resume {
        Some(ck) => {
            if ck.state.lattice.n() != cfg.n || ck.state.step > steps.len() {
                return Err(Error::Checkpoint(format!(
                    "checkpoint ({0}x{0}, step {1}) does not fit this run ({2}x{2}, {3} steps)",
                    ck.state.lattice.n(),
                    ck.state.step,
                    cfg.n,
                    steps.len()
                )));
            }
            (ck.state, ck.rows)
        }
        None => (
            FiniteState {
                step: 0,
                beta: 0.0,
                lattice: FiniteLattice::initial(cfg.n, cfg.m_mps)?,
            },
            Vec::new(),
        ),
    };
    state.lattice.set_m_mps(cfg.m_mps);
    while state.step < steps.len() {
        let (beta_after, dbeta) = steps[state.step];
        let params = ModelParams::new(cfg.h, cfg.delta, dbeta)?;
        let report = finite_step(&mut state.lattice, &params, &cfg.sweep)?;
        state.step += 1;
        state.beta = beta_after;
        let last = state.step == steps.len();
        if state.step % cfg.sample_stride == 0 || last {
            let sample = sample_correlators(&state.lattice, state.beta, &cfg.pairs)?;
            info!(
                "beta {:.6} D {} sweeps {} {}",
                state.beta,
                state.lattice.max_bond_dim(),
                report.sweeps,
                sample
                    .iter()
                    .map(|r| format!("{:.6}", r.value))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            sink.sample(&sample)?;
            rows.extend(sample);
        }
        if cfg.checkpoint_stride > 0 && (state.step % cfg.checkpoint_stride == 0 || last) {
            sink.checkpoint(&FiniteCheckpoint {
                h: cfg.h,
                delta: cfg.delta,
                d: cfg.sweep.d,
                state: state.clone(),
                rows: rows.clone(),
            })?;
        }
    }
    Ok(rows)
}
