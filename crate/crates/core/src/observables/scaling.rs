//! Finite-M scaling of the classical Ising model at the critical point.

use super::{
    classical_environment, classical_ising_tensor, fit_line, fit_power_law, local_expectation,
    transfer_correlation_length, two_point_correlator,
};
use crate::ctmrg::CtmConfig;
use crate::error::{Error, Result};
use crate::ising::pauli_z;

/// One environment dimension of a scaling scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingPoint {
    pub m: usize,
    pub xi: f64,
    pub z: f64,
    /// Power-law exponent of the connected `<Z Z>` correlator on `[3, xi/3]`.
    pub eta: f64,
    pub env_iters: usize,
}

pub const SCALING_HEADER: &str = "M,xi,Z,eta,env_iters";

impl ScalingPoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.15e},{:.12e},{}",
            self.m, self.xi, self.z, self.eta, self.env_iters
        )
    }
}

/// Converges the classical environment at `beta` with `cfg` and measures it.
pub fn classical_scaling_point(beta: f64, cfg: &CtmConfig) -> Result<ScalingPoint> {
    let a = classical_ising_tensor(beta)?;
    let env = classical_environment(&a, cfg)?;
    let xi = transfer_correlation_length(&a, &env)?;
    let z = local_expectation(&a, &env, &pauli_z())?;
    let r_max = (xi / 3.0).ceil().max(6.0) as usize;
    let samples: Vec<(f64, f64)> = two_point_correlator(&a, &env, &pauli_z(), r_max)?
        .iter()
        .map(|s| (s.r as f64, s.connected))
        .collect();
    let eta = fit_power_law(&samples, (3.0, r_max as f64))?.eta;
    Ok(ScalingPoint {
        m: cfg.m,
        xi,
        z,
        eta,
        env_iters: env.iterations(),
    })
}

/// Power laws `xi = c M^p` and `Z = c M^q` fitted over the scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub xi_prefactor: f64,
    pub xi_exponent: f64,
    pub z_prefactor: f64,
    pub z_exponent: f64,
}

pub fn fit_scaling(points: &[ScalingPoint]) -> Result<ScalingFit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need two M values to fit, got {}",
            points.len()
        )));
    }
    let lm: Vec<f64> = points.iter().map(|p| (p.m as f64).ln()).collect();
    let ln = |f: fn(&ScalingPoint) -> f64| -> Result<Vec<f64>> {
        points
            .iter()
            .map(|p| {
                let v = f(p);
                if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(Error::InvalidArgument(format!("non-positive value {v} at M={}", p.m)))
                }
            })
            .collect()
    };
    let xi = fit_line(&lm, &ln(|p| p.xi)?)?;
    let z = fit_line(&lm, &ln(|p| p.z)?)?;
    Ok(ScalingFit {
        xi_prefactor: xi.intercept.exp(),
        xi_exponent: xi.slope,
        z_prefactor: z.intercept.exp(),
        z_exponent: z.slope,
    })
}
