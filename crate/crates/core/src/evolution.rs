//! Imaginary-time trajectory on the infinite lattice: second-order
//! Suzuki-Trotter steps `U_X(dbeta/2) U_ZZ(dbeta) U_X(dbeta/2)` with a
//! self-consistent truncation after every interaction gate.

use crate::checkpoint::EvolutionCheckpoint;
use crate::ctmrg::{converge_env, norm_per_site, CtmConfig, Environment};
use crate::error::{Error, Result};
use crate::ising::{field_halfstep_matrix, pauli_x, pauli_z, ModelParams, TrotterTensor};
use crate::observables::local_expectation;
use crate::peps::{absorb_trotter, apply_spin_operator, initial_tensor, transfer_tensor_a, PepsTensor};
use crate::renorm::{refresh_env, self_consistent_update, Isometry, SelfConsistentConfig};
use log::info;

/// Piecewise-constant step size: segment `k` runs up to `ends[k]` with
/// nominal step `steps[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    segments: Vec<(f64, f64)>,
}

impl Schedule {
    pub fn constant(dbeta: f64, beta_max: f64) -> Result<Self> {
        Schedule::new(vec![(beta_max, dbeta)])
    }

    /// Segments as `(beta_end, dbeta)` with increasing ends.
    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidArgument("empty schedule".into()));
        }
        let mut prev = 0.0;
        for &(end, db) in &segments {
            if !(end > prev) || !end.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "schedule ends must increase, got {end} after {prev}"
                )));
            }
            if !(db > 0.0) || !db.is_finite() {
                return Err(Error::InvalidArgument(format!("step must be > 0, got {db}")));
            }
            prev = end;
        }
        Ok(Schedule { segments })
    }

    /// Parses `end:dbeta,end:dbeta,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut segs = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (e, d) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("schedule segment `{part}` is not end:dbeta")))?;
            let e: f64 = e
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad beta `{e}`")))?;
            let d: f64 = d
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad dbeta `{d}`")))?;
            segs.push((e, d));
        }
        Schedule::new(segs)
    }

    pub fn beta_max(&self) -> f64 {
        self.segments.last().unwrap().0
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    /// All steps as `(beta_after, dbeta)`. Each segment is split into the
    /// fewest equal steps not exceeding its nominal `dbeta`, so segment ends
    /// are hit exactly.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start = 0.0;
        for &(end, db) in &self.segments {
            let len = end - start;
            let n = ((len / db) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let step = len / n as f64;
            for k in 1..=n {
                let b = if k == n { end } else { start + k as f64 * step };
                out.push((b, step));
            }
            start = end;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub h: f64,
    pub delta: f64,
    /// Target bond dimension.
    pub d: usize,
    pub ctm: CtmConfig,
    pub tol_w: f64,
    pub max_outer: usize,
    pub env_max_sweeps: Option<usize>,
    pub schedule: Schedule,
    /// Observables are recorded every this many steps (and after the last).
    pub sample_stride: usize,
    /// Checkpoints are emitted every this many steps; 0 disables them.
    pub checkpoint_stride: usize,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        ModelParams::new(self.h, self.delta, 1.0)?;
        self.scu().validate()?;
        if self.sample_stride == 0 {
            return Err(Error::InvalidArgument("sample stride must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn scu(&self) -> SelfConsistentConfig {
        SelfConsistentConfig {
            d: self.d,
            tol_w: self.tol_w,
            max_outer: self.max_outer,
            ctm: self.ctm,
            env_max_sweeps: self.env_max_sweeps,
        }
    }
}

/// One row of the trajectory CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub beta: f64,
    pub z: f64,
    pub x: f64,
    /// Share of the bond environment's trace kept by the last truncation (1
    /// while the bond dimension is still growing).
    pub merit: f64,
    /// CTMRG iterations spent in the step.
    pub env_iters: usize,
}

pub const TRAJECTORY_HEADER: &str = "beta,Z,X,merit,env_iters";

impl TrajectoryRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.12},{:.15e},{:.15e},{:.15e},{}",
            self.beta, self.z, self.x, self.merit, self.env_iters
        )
    }
}

/// Everything carried from one step to the next.
#[derive(Clone, Debug)]
pub struct EvolutionState {
    pub step: usize,
    pub beta: f64,
    /// Normalized so that the norm per site is 1.
    pub a: PepsTensor,
    /// Converged for `a`.
    pub env: Environment,
    /// Isometry of the last truncation.
    pub w: Option<Isometry>,
}

impl EvolutionState {
    pub fn initial(cfg: &CtmConfig) -> Result<Self> {
        let a = initial_tensor();
        let env = converge_env(&transfer_tensor_a(&a)?, cfg, None)?;
        let kappa = norm_per_site(&env, &transfer_tensor_a(&a)?)?;
        Ok(EvolutionState {
            step: 0,
            beta: 0.0,
            a: a.scaled(kappa.powf(-0.5)),
            env,
            w: None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct StepReport {
    pub merit: f64,
    pub outer_iterations: usize,
    pub env_iters: usize,
}

/// Advances `state` by one second-order step of size `dbeta`.
pub fn second_order_step(state: &mut EvolutionState, dbeta: f64, cfg: &EvolutionConfig) -> Result<StepReport> {
    let params = ModelParams::new(cfg.h, cfg.delta, dbeta)?;
    let ux = field_halfstep_matrix(&params);
    let gate = TrotterTensor::new(dbeta)?;
    let scu = cfg.scu();

    let a1 = apply_spin_operator(&state.a, &ux)?.symmetrized()?;
    let b = absorb_trotter(&a1, &gate)?;
    let (a_prime, env_seed, report) = if b.bond_dim() <= cfg.d {
        // still growing: nothing to truncate
        (b.into_peps()?.symmetrized()?, None, (1.0, 0, 0))
    } else {
        let out = self_consistent_update(&a1, &b, &scu, Some(&state.env))?;
        let d = &out.diagnostics;
        state.w = Some(out.w);
        (
            out.a,
            Some(out.env),
            (
                *d.retained.last().unwrap(),
                d.outer_iterations(),
                d.env_iterations.iter().sum::<usize>(),
            ),
        )
    };
    let a2 = apply_spin_operator(&a_prime, &ux)?.symmetrized()?;
    let ta = transfer_tensor_a(&a2)?;
    let seed = env_seed.or_else(|| Some(state.env.clone()));
    let (env, it) = refresh_env(&ta, &scu, seed)?;
    let kappa = norm_per_site(&env, &ta)?;
    state.a = a2.scaled(kappa.powf(-0.5));
    state.env = env;
    state.beta += dbeta;
    state.step += 1;
    Ok(StepReport {
        merit: report.0,
        outer_iterations: report.1,
        env_iters: report.2 + it,
    })
}

/// Receives trajectory samples and checkpoints as they are produced.
pub trait EvolutionSink {
    fn sample(&mut self, _record: &TrajectoryRecord) -> Result<()> {
        Ok(())
    }

    fn checkpoint(&mut self, _ck: &EvolutionCheckpoint) -> Result<()> {
        Ok(())
    }
}

/// Sink that ignores everything.
pub struct NullSink;

impl EvolutionSink for NullSink {}

/// Runs the schedule from `beta = 0`, or from `resume`.
pub fn evolve(
    cfg: &EvolutionConfig,
    sink: &mut dyn EvolutionSink,
    resume: Option<EvolutionCheckpoint>,
) -> Result<Vec<TrajectoryRecord>> {
    cfg.validate()?;
    let steps = cfg.schedule.steps();
    let (mut state, mut trajectory) = match resume {
        Some(ck) => {
            if ck.state.step > steps.len() {
                return Err(Error::Checkpoint(format!(
                    "checkpoint at step {} is past the schedule's {} steps",
                    ck.state.step,
                    steps.len()
                )));
            }
            (ck.state, ck.trajectory)
        }
        None => (EvolutionState::initial(&cfg.ctm)?, Vec::new()),
    };
    let z_op = pauli_z();
    let x_op = pauli_x();
    while state.step < steps.len() {
        let (beta_after, dbeta) = steps[state.step];
        let report = second_order_step(&mut state, dbeta, cfg)?;
        // pin beta to the schedule so rounding never accumulates
        state.beta = beta_after;
        let last = state.step == steps.len();
        if state.step % cfg.sample_stride == 0 || last {
            let rec = TrajectoryRecord {
                beta: state.beta,
                z: local_expectation(&state.a, &state.env, &z_op)?,
                x: local_expectation(&state.a, &state.env, &x_op)?,
                merit: report.merit,
                env_iters: report.env_iters,
            };
            info!(
                "beta {:.6} Z {:.8} X {:.8} D {} outer {}",
                rec.beta,
                rec.z,
                rec.x,
                state.a.bond_dim(),
                report.outer_iterations
            );
            sink.sample(&rec)?;
            trajectory.push(rec);
        }
        if cfg.checkpoint_stride > 0 && (state.step % cfg.checkpoint_stride == 0 || last) {
            sink.checkpoint(&EvolutionCheckpoint {
                h: cfg.h,
                delta: cfg.delta,
                d: cfg.d,
                state: state.clone(),
                trajectory: trajectory.clone(),
            })?;
        }
    }
    Ok(trajectory)
}

/// Location of the steepest rise of `Z(beta)` by centred finite differences.
pub fn steepest_slope(records: &[TrajectoryRecord]) -> Option<(f64, f64)> {
    records
        .windows(2)
        .map(|w| {
            (
                0.5 * (w[0].beta + w[1].beta),
                (w[1].z - w[0].z) / (w[1].beta - w[0].beta),
            )
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
}
