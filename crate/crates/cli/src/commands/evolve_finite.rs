use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use thermpeps::checkpoint::FiniteCheckpoint;
use thermpeps::finite::{
    evolve_finite, CorrelatorRow, FiniteEvolutionConfig, FiniteSink, SweepConfig, CORRELATOR_HEADER,
};

use super::{checkpoint_stride, execute, field, schedule, Common, ModelOpts, MODEL_KEYS};
use crate::config::{parse_pairs, RunConfig};
use crate::error::CliError;
use crate::run::RunDir;

pub const CORRELATOR_FILE: &str = "correlators.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

#[derive(Args, Clone, Debug)]
pub struct Opts {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelOpts,
    /// Lattice side.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Boundary-MPS bond dimension.
    #[arg(long = "M-mps")]
    pub m_mps: Option<usize>,
    /// Cap on sweeps per step.
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    /// Site pairs `r:c-r:c;...`, rows and columns counted from 0.
    #[arg(long)]
    pub pairs: Option<String>,
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

const KEYS: &[&str] = &["N", "M_mps", "max_sweeps", "pairs"];

/// Sites two in from opposite corners, or the corners themselves.
fn default_pairs(n: usize) -> String {
    let (a, b) = if n >= 5 { (2, n - 3) } else { (0, n - 1) };
    format!("{a}:{a}-{b}:{b}")
}

fn resolve(o: &Opts) -> Result<(RunConfig, FiniteEvolutionConfig), CliError> {
    let mut c = o.common.base_config()?;
    o.model.apply(&mut c);
    c.set("N", o.n);
    c.set("M_mps", o.m_mps);
    c.set("max_sweeps", o.max_sweeps);
    c.set("pairs", o.pairs.as_ref());
    c.set_default("delta", 0.0);
    c.set_default("D", 4);
    c.set_default("M_mps", 16);
    c.set_default("tol_w", 1e-8);
    c.set_default("max_sweeps", 100);
    c.set_default("sample_stride", 10);
    c.set_default("checkpoint_stride", 10);
    c.check_keys(&[MODEL_KEYS, KEYS].concat())?;
    let n: usize = c.require("N")?;
    if n >= 2 {
        c.set_default("pairs", default_pairs(n));
    }

    let cfg = FiniteEvolutionConfig {
        n,
        h: field(&c)?,
        delta: c.require("delta")?,
        sweep: SweepConfig {
            d: c.require("D")?,
            tol_w: c.require("tol_w")?,
            max_sweeps: c.require("max_sweeps")?,
        },
        m_mps: c.require("M_mps")?,
        schedule: schedule(&c)?,
        pairs: parse_pairs(c.raw("pairs").unwrap_or(""))?,
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

impl FiniteSink for Sink {
    fn sample(&mut self, rows: &[CorrelatorRow]) -> thermpeps::Result<()> {
        for r in rows {
            writeln!(self.csv, "{}", r.csv_row())?;
        }
        self.csv.flush()?;
        Ok(())
    }

    fn checkpoint(&mut self, ck: &FiniteCheckpoint) -> thermpeps::Result<()> {
        ck.save(&self.checkpoint)
    }
}

pub fn run(o: Opts) -> Result<(), CliError> {
    let (c, cfg) = resolve(&o)?;
    let resume = match &o.resume {
        Some(p) => {
            let ck = FiniteCheckpoint::load(p)?;
            if ck.h != cfg.h || ck.delta != cfg.delta || ck.d != cfg.sweep.d {
                return Err(CliError::Config(format!(
                    "checkpoint was written with h={} delta={} D={}, this run has h={} delta={} D={}",
                    ck.h, ck.delta, ck.d, cfg.h, cfg.delta, cfg.sweep.d
                )));
            }
            Some(ck)
        }
        None => None,
    };
    let mut dir = RunDir::create("evolve-finite", c, o.common.out.as_deref())?;
    dir.resumed_from = o.resume.as_ref().map(|p| p.display().to_string());
    execute(dir, |dir| {
        let mut csv = dir.csv(CORRELATOR_FILE, CORRELATOR_HEADER)?;
        if let Some(ck) = &resume {
            for r in &ck.rows {
                writeln!(csv, "{}", r.csv_row())?;
            }
        }
        let mut sink = Sink {
            csv,
            checkpoint: dir.output(CHECKPOINT_FILE),
        };
        dir.timed("evolve", |_| Ok(evolve_finite(&cfg, &mut sink, resume)?))?;
        Ok(())
    })
}
