use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use thermpeps::checkpoint::EvolutionCheckpoint;
use thermpeps::evolution::{evolve, EvolutionConfig, EvolutionSink, TrajectoryRecord, TRAJECTORY_HEADER};
use thermpeps::CtmConfig;

use super::{checkpoint_stride, execute, field, schedule, Common, ModelOpts, MODEL_KEYS};
use crate::error::CliError;
use crate::run::RunDir;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

#[derive(Args, Clone, Debug)]
pub struct Opts {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelOpts,
    /// Environment bond dimension.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Convergence tolerance on the normalized corner spectrum.
    #[arg(long)]
    pub tol_env: Option<f64>,
    /// Cap on CTMRG iterations.
    #[arg(long)]
    pub max_iter_env: Option<usize>,
    /// Cap on outer iterations of each self-consistent update.
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// Cap on CTMRG sweeps per environment refresh [default: converge fully].
    #[arg(long)]
    pub env_max_sweeps: Option<usize>,
    /// Continue from a checkpoint written by an earlier run with the same settings.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

const KEYS: &[&str] = &["M", "tol_env", "max_iter_env", "max_outer", "env_max_sweeps"];

fn resolve(o: &Opts) -> Result<(crate::config::RunConfig, EvolutionConfig), CliError> {
    let mut c = o.common.base_config()?;
    o.model.apply(&mut c);
    c.set("M", o.m);
    c.set("tol_env", o.tol_env);
    c.set("max_iter_env", o.max_iter_env);
    c.set("max_outer", o.max_outer);
    c.set("env_max_sweeps", o.env_max_sweeps);
    c.set_default("delta", 0.0);
    c.set_default("D", 2);
    c.set_default("M", 16);
    c.set_default("tol_env", 1e-12);
    c.set_default("max_iter_env", 20_000);
    c.set_default("tol_w", 1e-10);
    c.set_default("max_outer", 100);
    c.set_default("sample_stride", 1);
    c.set_default("checkpoint_stride", 10);
    c.check_keys(&[MODEL_KEYS, KEYS].concat())?;

    let cfg = EvolutionConfig {
        h: field(&c)?,
        delta: c.require("delta")?,
        d: c.require("D")?,
        ctm: CtmConfig::new(c.require("M")?, c.require("tol_env")?, c.require("max_iter_env")?)?,
        tol_w: c.require("tol_w")?,
        max_outer: c.require("max_outer")?,
        env_max_sweeps: c.get("env_max_sweeps")?,
        schedule: schedule(&c)?,
        sample_stride: c.require("sample_stride")?,
        checkpoint_stride: checkpoint_stride(&c)?,
    };
    cfg.validate()?;
    Ok((c, cfg))
}

struct Sink {
    csv: BufWriter<File>,
    checkpoint: PathBuf,
}

impl EvolutionSink for Sink {
    fn sample(&mut self, r: &TrajectoryRecord) -> thermpeps::Result<()> {
        writeln!(self.csv, "{}", r.csv_row())?;
        self.csv.flush()?;
        Ok(())
    }

    fn checkpoint(&mut self, ck: &EvolutionCheckpoint) -> thermpeps::Result<()> {
        ck.save(&self.checkpoint)
    }
}

fn load_resume(path: &Path, cfg: &EvolutionConfig) -> Result<EvolutionCheckpoint, CliError> {
    let ck = EvolutionCheckpoint::load(path)?;
    if ck.h != cfg.h || ck.delta != cfg.delta || ck.d != cfg.d {
        return Err(CliError::Config(format!(
            "checkpoint was written with h={} delta={} D={}, this run has h={} delta={} D={}",
            ck.h, ck.delta, ck.d, cfg.h, cfg.delta, cfg.d
        )));
    }
    Ok(ck)
}

pub fn run(o: Opts) -> Result<(), CliError> {
    let (c, cfg) = resolve(&o)?;
    let resume = o.resume.as_deref().map(|p| load_resume(p, &cfg)).transpose()?;
    let mut dir = RunDir::create("evolve-infinite", c, o.common.out.as_deref())?;
    dir.resumed_from = o.resume.as_ref().map(|p| p.display().to_string());
    execute(dir, |dir| {
        let mut csv = dir.csv(TRAJECTORY_FILE, TRAJECTORY_HEADER)?;
        if let Some(ck) = &resume {
            for r in &ck.trajectory {
                writeln!(csv, "{}", r.csv_row())?;
            }
        }
        let mut sink = Sink {
            csv,
            checkpoint: dir.output(CHECKPOINT_FILE),
        };
        let traj = dir.timed("evolve", |_| Ok(evolve(&cfg, &mut sink, resume)?))?;
        if let Some((beta, slope)) = thermpeps::evolution::steepest_slope(&traj) {
            log::info!("steepest dZ/dbeta = {slope:.4} at beta = {beta:.6}");
        }
        Ok(())
    })
}
