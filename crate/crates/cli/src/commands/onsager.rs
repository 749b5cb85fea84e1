use std::io::Write;

use clap::Args;
use thermpeps::observables::{classical_scaling_point, fit_scaling, SCALING_HEADER};
use thermpeps::{CtmConfig, BETA0};

use super::{execute, Common};
use crate::config::parse_list;
use crate::error::CliError;
use crate::run::RunDir;

pub const SCALING_FILE: &str = "scaling.csv";
pub const FIT_FILE: &str = "scaling_fit.csv";

#[derive(Args, Clone, Debug)]
pub struct Opts {
    #[command(flatten)]
    pub common: Common,
    /// Environment dimensions, comma separated.
    #[arg(long = "M")]
    pub m: Option<String>,
    /// Inverse temperature [default: the classical critical point].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Convergence tolerance on the normalized corner spectrum.
    #[arg(long)]
    pub tol_env: Option<f64>,
    /// Cap on CTMRG iterations.
    #[arg(long)]
    pub max_iter_env: Option<usize>,
}

pub fn run(o: Opts) -> Result<(), CliError> {
    let mut c = o.common.base_config()?;
    c.set("M", o.m.as_ref());
    c.set("beta", o.beta);
    c.set("tol_env", o.tol_env);
    c.set("max_iter_env", o.max_iter_env);
    c.set_default("M", "8,12,16,24,32");
    c.set_default("beta", BETA0);
    c.set_default("tol_env", 1e-9);
    c.set_default("max_iter_env", 200_000);
    c.check_keys(&["M", "beta", "tol_env", "max_iter_env"])?;
    let ms: Vec<usize> = parse_list("M", c.raw("M").unwrap())?;
    let beta: f64 = c.require("beta")?;
    let cfgs = ms
        .iter()
        .map(|&m| CtmConfig::new(m, c.require("tol_env")?, c.require("max_iter_env")?).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    if cfgs.is_empty() || !(beta > 0.0) {
        return Err(CliError::Config("need at least one M and beta > 0".into()));
    }

    let dir = RunDir::create("onsager-bench", c, o.common.out.as_deref())?;
    execute(dir, |dir| {
        let mut csv = dir.csv(SCALING_FILE, SCALING_HEADER)?;
        let mut points = Vec::new();
        for cfg in &cfgs {
            let p = dir.timed(&format!("M={}", cfg.m), |_| Ok(classical_scaling_point(beta, cfg)?))?;
            log::info!(
                "M {} xi {:.3} Z {:.6} eta {:.4} ({} iterations)",
                p.m,
                p.xi,
                p.z,
                p.eta,
                p.env_iters
            );
            writeln!(csv, "{}", p.csv_row())?;
            csv.flush()?;
            points.push(p);
        }
        if points.len() >= 2 {
            let f = fit_scaling(&points)?;
            log::info!(
                "xi = {:.3} M^{:.3}, Z = {:.3} M^{:.3}",
                f.xi_prefactor,
                f.xi_exponent,
                f.z_prefactor,
                f.z_exponent
            );
            let mut out = dir.csv(FIT_FILE, "quantity,prefactor,exponent")?;
            writeln!(out, "xi,{:.15e},{:.15e}", f.xi_prefactor, f.xi_exponent)?;
            writeln!(out, "Z,{:.15e},{:.15e}", f.z_prefactor, f.z_exponent)?;
        }
        Ok(())
    })
}
