mod correlator;
mod evolve_finite;
mod evolve_infinite;
mod onsager;
mod oracle_check;

use std::path::PathBuf;

use clap::{Args, Subcommand};
use thermpeps::evolution::Schedule;
use thermpeps::H0;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::run::RunDir;

#[derive(Subcommand)]
pub enum Command {
    /// Imaginary-time evolution on the infinite lattice; writes trajectory.csv.
    EvolveInfinite(evolve_infinite::Opts),
    /// Imaginary-time evolution on an open NxN lattice; writes correlators.csv.
    EvolveFinite(evolve_finite::Opts),
    /// Row correlator and fits from an infinite-lattice checkpoint.
    Correlator(correlator::Opts),
    /// Classical Ising at criticality against the environment dimension M.
    OnsagerBench(onsager::Opts),
    /// Compares the algorithm with dense exact results on a small lattice.
    OracleCheck(oracle_check::Opts),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::EvolveInfinite(o) => &o.common,
            Command::EvolveFinite(o) => &o.common,
            Command::Correlator(o) => &o.common,
            Command::OnsagerBench(o) => &o.common,
            Command::OracleCheck(o) => &o.common,
        }
    }

    pub fn log_level(&self) -> &str {
        &self.common().log
    }
}

/// Flags every subcommand takes.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Config file of `key = value` lines; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $THERMPEPS_OUTPUT_ROOT/<command>-<config hash>, root `runs`].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Log filter (error, warn, info, debug, trace).
    #[arg(long, default_value = "info")]
    pub log: String,
}

impl Common {
    fn base_config(&self) -> Result<RunConfig, CliError> {
        match &self.config {
            Some(p) => RunConfig::load(p),
            None => Ok(RunConfig::default()),
        }
    }
}

/// Field strength and step schedule, shared by both evolutions.
#[derive(Args, Clone, Debug)]
pub struct ModelOpts {
    /// Transverse field.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<f64>,
    /// Transverse field as a fraction of the quantum critical field.
    #[arg(long)]
    pub h_frac: Option<f64>,
    /// Longitudinal bias field.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Target bond dimension.
    #[arg(long = "D")]
    pub d: Option<usize>,
    /// Step schedule `end:dbeta,end:dbeta,...` (exclusive with --dbeta/--beta-max).
    #[arg(long)]
    pub schedule: Option<String>,
    /// Constant step, with --beta-max.
    #[arg(long)]
    pub dbeta: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Projector-change tolerance of the isometry updates.
    #[arg(long)]
    pub tol_w: Option<f64>,
    /// Record observables every this many steps.
    #[arg(long)]
    pub sample_stride: Option<usize>,
    /// Write a checkpoint every this many steps (the final state is always written).
    #[arg(long)]
    pub checkpoint_stride: Option<usize>,
}

pub const MODEL_KEYS: &[&str] = &[
    "h",
    "h_frac",
    "delta",
    "D",
    "schedule",
    "dbeta",
    "beta_max",
    "tol_w",
    "sample_stride",
    "checkpoint_stride",
];

impl ModelOpts {
    fn apply(&self, c: &mut RunConfig) {
        c.set("h", self.h);
        c.set("h_frac", self.h_frac);
        c.set("delta", self.delta);
        c.set("D", self.d);
        c.set("schedule", self.schedule.as_ref());
        c.set("dbeta", self.dbeta);
        c.set("beta_max", self.beta_max);
        c.set("tol_w", self.tol_w);
        c.set("sample_stride", self.sample_stride);
        c.set("checkpoint_stride", self.checkpoint_stride);
    }
}

/// Absolute field from `h` or `h_frac`.
pub fn field(c: &RunConfig) -> Result<f64, CliError> {
    match (c.get::<f64>("h")?, c.get::<f64>("h_frac")?) {
        (Some(h), None) => Ok(h),
        (None, Some(f)) => Ok(f * H0),
        (Some(_), Some(_)) => Err(CliError::Config("give either `h` or `h_frac`, not both".into())),
        (None, None) => Err(CliError::Config("missing transverse field (`h` or `h_frac`)".into())),
    }
}

pub fn schedule(c: &RunConfig) -> Result<Schedule, CliError> {
    match (c.raw("schedule"), c.get::<f64>("dbeta")?, c.get::<f64>("beta_max")?) {
        (Some(s), None, None) => Ok(Schedule::parse(s)?),
        (None, Some(db), Some(end)) => Ok(Schedule::constant(db, end)?),
        (Some(_), _, _) => Err(CliError::Config("`schedule` excludes `dbeta` and `beta_max`".into())),
        _ => Err(CliError::Config(
            "need `schedule`, or both `dbeta` and `beta_max`".into(),
        )),
    }
}

/// Checkpoint stride for the core loop: 0 in the config still saves the
/// final state.
pub fn checkpoint_stride(c: &RunConfig) -> Result<usize, CliError> {
    Ok(match c.require::<usize>("checkpoint_stride")? {
        0 => usize::MAX,
        k => k,
    })
}

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::EvolveInfinite(o) => evolve_infinite::run(o),
        Command::EvolveFinite(o) => evolve_finite::run(o),
        Command::Correlator(o) => correlator::run(o),
        Command::OnsagerBench(o) => onsager::run(o),
        Command::OracleCheck(o) => oracle_check::run(o),
    }
}

/// Runs `body` in `dir` and writes the manifest whatever the outcome.
pub fn execute(mut dir: RunDir, body: impl FnOnce(&mut RunDir) -> Result<(), CliError>) -> Result<(), CliError> {
    let result = body(&mut dir);
    dir.finish(&result)?;
    if result.is_ok() {
        log::info!("done: {}", dir.path().display());
    }
    result
}
