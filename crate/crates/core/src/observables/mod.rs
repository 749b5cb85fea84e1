//! Expectation values and correlators from a converged infinite environment.

mod fit;
mod scaling;

pub use fit::{default_windows, fit_correlation_length, fit_line, fit_power_law, FitResult, Line};
pub use scaling::{classical_scaling_point, fit_scaling, ScalingFit, ScalingPoint, SCALING_HEADER};

use crate::ctmrg::{column_transfer, converge_env, left_column, network_3x3, CtmConfig, Environment};
use crate::error::{Error, Result};
use crate::ising::{projector_up, TrotterTensor, BETA0};
use crate::peps::{absorb_trotter, initial_tensor, transfer_tensor_a, transfer_tensor_op, PepsTensor};
use crate::tensor::{contract, symm_eig, Tensor};

fn require(env: &Environment) -> Result<()> {
    if env.is_converged() {
        Ok(())
    } else {
        Err(Error::EnvNotConverged {
            iterations: env.iterations(),
            residual: env.residuals().last().copied().unwrap_or(f64::INFINITY),
        })
    }
}

/// `<op>` on one site: the 3x3 network with `op` on the central spin line
/// divided by the bare network.
pub fn local_expectation(a: &PepsTensor, env: &Environment, op: &Tensor) -> Result<f64> {
    require(env)?;
    let num = network_3x3(env, transfer_tensor_op(a, op)?.tensor())?;
    let den = network_3x3(env, transfer_tensor_a(a)?.tensor())?;
    Ok(num / den)
}

/// One entry of a correlator table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelatorSample {
    pub r: usize,
    /// `<O_0 O_R> - <O_0><O_R>`, all measured in the same network.
    pub connected: f64,
    pub two_point: f64,
    pub one_point: f64,
}

/// Connected correlator along a row for `R = 0..=r_max`.
///
/// The channel is a row of transfer tensors between a row of top tensors and
/// a row of bottom tensors, capped on both ends by corner-top-corner columns.
pub fn two_point_correlator(
    a: &PepsTensor,
    env: &Environment,
    op: &Tensor,
    r_max: usize,
) -> Result<Vec<CorrelatorSample>> {
    require(env)?;
    let ta = transfer_tensor_a(a)?;
    let to = transfer_tensor_op(a, op)?;
    let op2 = contract(op, op, &[(1, 0)])?;
    let too = transfer_tensor_op(a, &op2)?;
    let (ta, to, too) = (ta.tensor(), to.tensor(), too.tensor());

    let cap = left_column(env)?;
    let mut out = Vec::with_capacity(r_max + 1);
    let z = network_3x3(env, ta)?;
    let one = network_3x3(env, to)? / z;
    let two = network_3x3(env, too)? / z;
    out.push(CorrelatorSample {
        r: 0,
        connected: two - one * one,
        two_point: two,
        one_point: one,
    });

    let mut n = column_transfer(env, &cap, ta)?;
    let mut o = column_transfer(env, &cap, to)?;
    for r in 1..=r_max {
        let two = column_transfer(env, &o, to)?.dot(&cap)?;
        n = column_transfer(env, &n, ta)?;
        o = column_transfer(env, &o, ta)?;
        let den = n.dot(&cap)?;
        let (two, one) = (two / den, o.dot(&cap)? / den);
        out.push(CorrelatorSample {
            r,
            connected: two - one * one,
            two_point: two,
            one_point: one,
        });
        let s = n.norm();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NoConvergence {
                routine: "two_point_correlator",
            });
        }
        n.scale(1.0 / s);
        o.scale(1.0 / s);
    }
    Ok(out)
}

/// Leading eigenvalues (by magnitude, descending) of the row channel's column
/// transfer operator, from Lanczos with full reorthogonalization.
pub fn transfer_spectrum(a: &PepsTensor, env: &Environment, count: usize, steps: usize) -> Result<Vec<f64>> {
    require(env)?;
    let ta = transfer_tensor_a(a)?;
    let cap = left_column(env)?;
    let dims = cap.dims().to_vec();
    let n = cap.len();
    let steps = steps.min(n).max(count.min(n));

    // deterministic start with weight in every symmetry sector
    let mut x = 0x2545_f491_4f6c_dd1du64;
    let mut v = cap.clone();
    let scale = v.norm().max(1.0);
    for e in v.data_mut() {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        *e += scale * ((x >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
    }
    v.scale(1.0 / v.norm());

    let mut basis: Vec<Tensor> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..steps {
        let mut w = column_transfer(env, &basis[j], ta.tensor())?.reshape(&dims)?;
        let aj = w.dot(&basis[j])?;
        alpha.push(aj);
        for q in &basis {
            let c = w.dot(q)?;
            w.axpy(-c, q)?;
        }
        for q in &basis {
            let c = w.dot(q)?;
            w.axpy(-c, q)?;
        }
        let b = w.norm();
        if j + 1 == steps || b < 1e-13 * aj.abs().max(1e-300) {
            break;
        }
        beta.push(b);
        w.scale(1.0 / b);
        basis.push(w);
    }
    let k = alpha.len();
    let t = Tensor::from_fn(&[k, k], |ix| {
        let (i, j) = (ix[0], ix[1]);
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let mut vals = symm_eig(&t)?.values;
    vals.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
    vals.truncate(count);
    Ok(vals)
}

/// `1 / ln(|lambda_0 / lambda_1|)` from the channel's transfer spectrum.
pub fn transfer_correlation_length(a: &PepsTensor, env: &Environment) -> Result<f64> {
    let s = transfer_spectrum(a, env, 2, 120)?;
    if s.len() < 2 || s[1] == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (s[0] / s[1]).abs().ln())
}

/// Spontaneous magnetization of the classical 2D Ising model with unit
/// coupling.
pub fn onsager_exact_magnetization(beta: f64) -> f64 {
    if beta <= BETA0 {
        return 0.0;
    }
    let x = 1.0 - (2.0 * beta).sinh().powi(-4);
    x.max(0.0).powf(0.125)
}

/// Exact `D = 2` PEPS of the classical Ising Gibbs state at `beta`: all
/// `Z x Z` gates applied at once to the infinite-temperature state.
pub fn classical_ising_tensor(beta: f64) -> Result<PepsTensor> {
    absorb_trotter(&initial_tensor(), &TrotterTensor::new(beta)?)?.into_peps()
}

/// Environment of [`classical_ising_tensor`] started from spin-up polarized
/// boundaries, so it converges to the `+` phase below the critical temperature.
pub fn classical_environment(a: &PepsTensor, cfg: &CtmConfig) -> Result<Environment> {
    let seed = Environment::cold_start(&transfer_tensor_op(a, &projector_up())?)?;
    converge_env(&transfer_tensor_a(a)?, cfg, Some(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{pauli_x, pauli_z};

    #[test]
    fn onsager_limits() {
        assert_eq!(onsager_exact_magnetization(BETA0), 0.0);
        assert!((onsager_exact_magnetization(50.0) - 1.0).abs() < 1e-15);
        // 0.94025896..., which the usual quote 0.9406 rounds loosely
        let m = onsager_exact_magnetization(1.2 * BETA0);
        assert!((m - 0.940_258_97).abs() < 1e-8, "{m}");
    }

    #[test]
    fn infinite_temperature_observables() {
        let a = initial_tensor();
        let env = converge_env(
            &transfer_tensor_a(&a).unwrap(),
            &CtmConfig::new(2, 1e-12, 10).unwrap(),
            None,
        )
        .unwrap();
        assert!((local_expectation(&a, &env, &Tensor::eye(2)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(local_expectation(&a, &env, &pauli_z()).unwrap(), 0.0);
        assert_eq!(local_expectation(&a, &env, &pauli_x()).unwrap(), 0.0);
        let c = two_point_correlator(&a, &env, &pauli_z(), 3).unwrap();
        assert!((c[0].connected - 1.0).abs() < 1e-15);
        assert!(c[1..].iter().all(|s| s.connected.abs() < 1e-15));
    }

    #[test]
    fn correlator_at_zero_separation() {
        let a = classical_ising_tensor(0.5).unwrap();
        let env = classical_environment(&a, &CtmConfig::new(8, 1e-11, 2000).unwrap()).unwrap();
        let m = local_expectation(&a, &env, &pauli_z()).unwrap();
        let c = two_point_correlator(&a, &env, &pauli_z(), 0).unwrap();
        assert!((c[0].connected - (1.0 - m * m)).abs() < 1e-12);
        assert!((local_expectation(&a, &env, &Tensor::eye(2)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_magnetization_near_onsager() {
        let beta = 1.2 * BETA0;
        let a = classical_ising_tensor(beta).unwrap();
        let env = classical_environment(&a, &CtmConfig::new(8, 1e-11, 2000).unwrap()).unwrap();
        let m = local_expectation(&a, &env, &pauli_z()).unwrap();
        assert!((m - onsager_exact_magnetization(beta)).abs() < 1e-4, "{m}");
    }

    #[test]
    fn disordered_correlation_length_matches_exact() {
        // row correlation length above the critical temperature,
        // 1 / (ln coth(beta) - 2 beta)
        let beta: f64 = 0.35;
        let exact = 1.0 / ((1.0 / beta.tanh()).ln() - 2.0 * beta);
        let a = classical_ising_tensor(beta).unwrap();
        let ta = transfer_tensor_a(&a).unwrap();
        let env = converge_env(&ta, &CtmConfig::new(12, 1e-12, 2000).unwrap(), None).unwrap();
        let xi = transfer_correlation_length(&a, &env).unwrap();
        assert!((xi - exact).abs() < 0.05 * exact, "{xi} vs {exact}");
        let c = two_point_correlator(&a, &env, &pauli_z(), 60).unwrap();
        // strip the R^{-1/2} prefactor of the disordered-phase tail
        let s: Vec<(f64, f64)> = c
            .iter()
            .map(|x| (x.r as f64, x.connected * (x.r as f64).sqrt()))
            .collect();
        let (tail, _) = default_windows(xi);
        let f = fit_correlation_length(&s, tail).unwrap();
        assert!((f.xi - exact).abs() < 0.02 * exact, "{} vs {exact}", f.xi);
    }
}
