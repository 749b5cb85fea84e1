use std::io::Write;

use clap::Args;
use thermpeps::checkpoint::EvolutionCheckpoint;
use thermpeps::observables::{
    default_windows, fit_correlation_length, fit_power_law, local_expectation, transfer_correlation_length,
    two_point_correlator,
};
use thermpeps::{pauli_x, pauli_z};

use super::{execute, Common};
use crate::config::parse_window;
use crate::error::CliError;
use crate::run::RunDir;

pub const CORRELATOR_FILE: &str = "correlator.csv";
pub const FITS_FILE: &str = "fits.csv";
pub const FITS_HEADER: &str = "kind,xi,eta,amplitude,window_lo,window_hi,residual";

#[derive(Args, Clone, Debug)]
pub struct Opts {
    #[command(flatten)]
    pub common: Common,
    /// Infinite-lattice checkpoint holding the state and its environment.
    #[arg(long)]
    pub checkpoint: Option<String>,
    /// Operator: z or x.
    #[arg(long)]
    pub op: Option<String>,
    /// Largest separation [default: end of the tail window].
    #[arg(long)]
    pub r_max: Option<usize>,
    /// Exponential-fit window `lo:hi` [default: 2 xi : 4 xi, xi from the transfer matrix].
    #[arg(long)]
    pub tail: Option<String>,
    /// Power-law window `lo:hi` [default: 3 : xi/3].
    #[arg(long)]
    pub power: Option<String>,
}

const KEYS: &[&str] = &["checkpoint", "op", "r_max", "tail", "power"];

pub fn run(o: Opts) -> Result<(), CliError> {
    let mut c = o.common.base_config()?;
    c.set("checkpoint", o.checkpoint.as_ref());
    c.set("op", o.op.as_ref());
    c.set("r_max", o.r_max);
    c.set("tail", o.tail.as_ref());
    c.set("power", o.power.as_ref());
    c.set_default("op", "z");
    c.check_keys(KEYS)?;
    let path: String = c.require("checkpoint")?;
    let (name, op) = match c.raw("op").unwrap() {
        "z" | "Z" => ("zz", pauli_z()),
        "x" | "X" => ("xx", pauli_x()),
        other => return Err(CliError::Config(format!("`op` must be z or x, got `{other}`"))),
    };
    let explicit = |k: &str| c.raw(k).map(|s| parse_window(k, s)).transpose();
    let (tail, power, r_max) = (explicit("tail")?, explicit("power")?, c.get::<usize>("r_max")?);
    let ck = EvolutionCheckpoint::load(path.as_ref())?;

    let dir = RunDir::create("correlator", c, o.common.out.as_deref())?;
    execute(dir, |dir| {
        let (a, env) = (&ck.state.a, &ck.state.env);
        let xi_t = dir.timed("transfer", |_| Ok(transfer_correlation_length(a, env)?))?;
        let (tail_d, power_d) = default_windows(xi_t);
        let (tail, power) = (tail.unwrap_or(tail_d), power.unwrap_or(power_d));
        let r_max = r_max.unwrap_or(tail.1.ceil().max(power.1.ceil()) as usize);
        log::info!("beta {} <{name}> xi_transfer {xi_t:.3}, R up to {r_max}", ck.state.beta);
        let samples = dir.timed("correlator", |_| Ok(two_point_correlator(a, env, &op, r_max)?))?;

        let mut csv = dir.csv(CORRELATOR_FILE, &format!("R,C{name}"))?;
        for s in &samples {
            writeln!(csv, "{},{:.15e}", s.r, s.connected)?;
        }
        csv.flush()?;

        let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.r as f64, s.connected)).collect();
        let mut fits = dir.csv(FITS_FILE, FITS_HEADER)?;
        writeln!(fits, "transfer,{xi_t:.15e},,,,,")?;
        for (kind, fit) in [
            ("exponential", fit_correlation_length(&pts, tail)),
            ("power", fit_power_law(&pts, power)),
        ] {
            match fit {
                Ok(f) => {
                    log::info!("{kind} fit on {:?}: xi {:.4} eta {:.4}", f.window, f.xi, f.eta);
                    writeln!(
                        fits,
                        "{kind},{:.15e},{:.15e},{:.15e},{},{},{:.6e}",
                        f.xi, f.eta, f.amplitude, f.window.0, f.window.1, f.residual
                    )?;
                }
                // a window without usable points is reported, not fatal
                Err(e) => log::warn!("{kind} fit skipped: {e}"),
            }
        }
        fits.flush()?;
        let m = local_expectation(a, env, &op)?;
        log::info!("<{}> = {m:.10}", &name[..1]);
        Ok(())
    })
}
