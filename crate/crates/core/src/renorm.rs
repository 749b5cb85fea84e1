//! Truncation of the gate-enlarged bond back to `D` by a self-consistently
//! optimized isometry.

use crate::ctmrg::{bond_environment, converge_env, ctm_step, gauge_accelerate, CtmConfig, Environment};
use crate::error::{Error, Result};
use crate::peps::{renormalize_legs, transfer_tensor_a, transfer_tensor_b, Direction, EnlargedTensor, PepsTensor};
use crate::tensor::{contract, linalg_asymmetry, symm_eig, SymmEig, Tensor};
use log::{debug, warn};

const ISOMETRY_TOL: f64 = 1e-10;

/// Isometry `W` (`kD x D_out`) with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry(Tensor);

impl Isometry {
    pub fn new(w: Tensor) -> Result<Self> {
        if w.rank() != 2 || w.dim(1) > w.dim(0) {
            return Err(Error::dim(format_args!("isometry must be tall, got {:?}", w.dims())));
        }
        let gram = contract(&w, &w, &[(0, 0)])?;
        let err = gram.max_diff(&Tensor::eye(w.dim(1)));
        if err > ISOMETRY_TOL {
            return Err(Error::InvalidArgument(format!(
                "columns are not orthonormal (error {err:e})"
            )));
        }
        Ok(Isometry(w))
    }

    /// Identity on the first `d_in` enlarged indices `k u + 0` (the `s = 0`
    /// block), followed by `s = 1, 2, ..` blocks if `d_out > d_in`.
    pub fn embedding(d_in: usize, k: usize, d_out: usize) -> Result<Self> {
        if d_out > k * d_in || d_out == 0 {
            return Err(Error::dim(format_args!(
                "cannot embed {d_out} columns into {}",
                k * d_in
            )));
        }
        let w = Tensor::from_fn(&[k * d_in, d_out], |ix| {
            let (s, u) = (ix[1] / d_in, ix[1] % d_in);
            if ix[0] == k * u + s {
                1.0
            } else {
                0.0
            }
        });
        Ok(Isometry(w))
    }

    pub fn matrix(&self) -> &Tensor {
        &self.0
    }

    pub fn input_dim(&self) -> usize {
        self.0.dim(0)
    }

    pub fn output_dim(&self) -> usize {
        self.0.dim(1)
    }

    /// `P^{kl} = sum_b W^k_b W^l_b`.
    pub fn projector(&self) -> Tensor {
        contract(&self.0, &self.0, &[(1, 1)]).expect("matrix shape")
    }

    /// Frobenius distance between the projectors of two isometries.
    pub fn projector_distance(&self, other: &Isometry) -> f64 {
        let mut p = self.projector();
        p.axpy(-1.0, &other.projector()).expect("same shape");
        p.norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvSource {
    Infinite,
    Finite,
}

/// Symmetric `kD x kD` bond environment matrix.
#[derive(Clone, Debug)]
pub struct BondEnvironment {
    e: Tensor,
    source: EnvSource,
}

impl BondEnvironment {
    pub fn new(e: Tensor, source: EnvSource) -> Result<Self> {
        if e.rank() != 2 || e.dim(0) != e.dim(1) {
            return Err(Error::dim(format_args!(
                "bond environment must be square, got {:?}",
                e.dims()
            )));
        }
        let asym = linalg_asymmetry(&e);
        if asym > 1e-10 * e.max_abs().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(BondEnvironment { e, source })
    }

    pub fn matrix(&self) -> &Tensor {
        &self.e
    }

    pub fn source(&self) -> EnvSource {
        self.source
    }

    /// `sum_{kl} P^{kl} E^{kl}`.
    pub fn merit(&self, w: &Isometry) -> f64 {
        self.e.dot(&w.projector()).expect("shapes checked by caller")
    }
}

/// Result of [`optimize_isometry`].
#[derive(Clone, Debug)]
pub struct Optimized {
    pub isometry: Isometry,
    /// Sum of the `D` leading eigenvalues of `E`.
    pub merit: f64,
    /// Sum of all eigenvalues of `E`.
    pub trace: f64,
    /// Eigenvalues of `E`, descending.
    pub values: Vec<f64>,
}

impl Optimized {
    /// Share of the trace kept by the truncation.
    pub fn retained_fraction(&self) -> f64 {
        self.merit / self.trace
    }
}

/// `W` from the `d` leading eigenvectors of `E`.
pub fn optimize_isometry(e: &BondEnvironment, d: usize) -> Result<Optimized> {
    let n = e.e.dim(0);
    if d == 0 || d > n {
        return Err(Error::dim(format_args!("cannot keep {d} of {n} bond states")));
    }
    let eig = symm_eig(&e.e)?;
    let lmax = eig.values[0].abs().max(f64::MIN_POSITIVE);
    let significant = eig.values.iter().filter(|&&l| l > 1e-14 * lmax).count();
    if significant < d {
        warn!("bond environment has only {significant} significant eigenvalues for D={d}");
    }
    Ok(leading(eig, d))
}

/// Bond states whose environment eigenvalue is below this fraction of the
/// largest are dropped by [`optimize_significant`]; their eigenvectors are
/// too poorly determined for the self-consistent iterations to settle.
pub const RANK_CUTOFF: f64 = 1e-8;

/// Like [`optimize_isometry`], but keeps only eigenvalues above
/// [`RANK_CUTOFF`] times the largest: at least one and at most `d` states.
pub fn optimize_significant(e: &BondEnvironment, d: usize) -> Result<Optimized> {
    let n = e.e.dim(0);
    if d == 0 {
        return Err(Error::dim(format_args!("cannot keep {d} of {n} bond states")));
    }
    let eig = symm_eig(&e.e)?;
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let keep = eig
        .values
        .iter()
        .filter(|&&v| v > RANK_CUTOFF * top)
        .count()
        .clamp(1, d.min(n));
    Ok(leading(eig, keep))
}

fn leading(eig: SymmEig, d: usize) -> Optimized {
    let n = eig.vectors.dim(0);
    let w = Tensor::from_fn(&[n, d], |ix| eig.vectors.get(&[ix[0], ix[1]]));
    Optimized {
        isometry: Isometry(w),
        merit: eig.values[..d].iter().sum(),
        trace: eig.values.iter().sum(),
        values: eig.values,
    }
}

/// `A'` from `B` with `W` on all four legs, then symmetrized.
pub fn renormalize(b: &EnlargedTensor, w: &Isometry) -> Result<PepsTensor> {
    if b.bond_dim() != w.input_dim() || !b.tensor().dims()[2..].iter().all(|&x| x == w.input_dim()) {
        return Err(Error::dim(format_args!(
            "isometry input {} does not match B {:?}",
            w.input_dim(),
            b.tensor().dims()
        )));
    }
    let wm = Some(w.matrix());
    let t = renormalize_legs(b.tensor(), [wm, wm, wm, wm])?;
    PepsTensor::new(t)?.symmetrized()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfConsistentConfig {
    /// Target bond dimension.
    pub d: usize,
    /// Projector distance at convergence.
    pub tol_w: f64,
    pub max_outer: usize,
    pub ctm: CtmConfig,
    /// Caps the CTMRG sweeps per outer iteration; the environment is then
    /// used whether or not it reached `tol_env`.
    pub env_max_sweeps: Option<usize>,
}

impl SelfConsistentConfig {
    pub fn validate(&self) -> Result<()> {
        self.ctm.validate()?;
        if self.d == 0 {
            return Err(Error::InvalidArgument("D must be >= 1".into()));
        }
        if !(self.tol_w > 0.0) {
            return Err(Error::InvalidArgument(format!("tol_w must be > 0, got {}", self.tol_w)));
        }
        if self.max_outer == 0 || self.env_max_sweeps == Some(0) {
            return Err(Error::InvalidArgument("iteration limits must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateDiagnostics {
    /// Merit of each new isometry on the environment it was optimized on.
    pub merits: Vec<f64>,
    pub retained: Vec<f64>,
    pub env_iterations: Vec<usize>,
    pub projector_distances: Vec<f64>,
}

impl UpdateDiagnostics {
    pub fn outer_iterations(&self) -> usize {
        self.projector_distances.len()
    }

    /// CSV with header `outer,merit,retained,env_iters,projector_distance`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("outer,merit,retained,env_iters,projector_distance\n");
        for k in 0..self.outer_iterations() {
            s.push_str(&format!(
                "{},{:e},{:e},{},{:e}\n",
                k + 1,
                self.merits[k],
                self.retained[k],
                self.env_iterations[k],
                self.projector_distances[k]
            ));
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct UpdateOutput {
    pub a: PepsTensor,
    pub w: Isometry,
    /// Environment converged for the last-but-one `A'`; a good warm start.
    pub env: Environment,
    pub diagnostics: UpdateDiagnostics,
}

/// Environment for `a` warm-started from `init`, honoring the sweep cap.
pub(crate) fn refresh_env(
    a: &crate::peps::TransferTensor,
    cfg: &SelfConsistentConfig,
    init: Option<Environment>,
) -> Result<(Environment, usize)> {
    match cfg.env_max_sweeps {
        None => {
            let env = converge_env(a, &cfg.ctm, init)?;
            let it = env.iterations();
            Ok((env, it))
        }
        Some(cap) => {
            let mut env = match init {
                Some(e) if e.leg_dim() == a.leg_dim() => e,
                _ => Environment::cold_start(a)?,
            };
            let before = env.iterations();
            for _ in 0..cap {
                env = ctm_step(&env, a, &cfg.ctm)?;
                if *env.residuals().last().unwrap() < cfg.ctm.tol_env {
                    break;
                }
            }
            let it = env.iterations() - before;
            Ok((env.accept(), it))
        }
    }
}

fn bond_env_for(a_prime: &PepsTensor, b: &EnlargedTensor, w: &Isometry, env: &Environment) -> Result<BondEnvironment> {
    let bl = transfer_tensor_b(a_prime, b, w.matrix(), Direction::Right)?;
    let br = transfer_tensor_b(a_prime, b, w.matrix(), Direction::Left)?;
    bond_environment(env, &bl, &br)
}

/// Self-consistent isometry for `B = absorb_trotter(A_in)`.
///
/// The new bond dimension is at most `cfg.d`; bond states the environment
/// gives negligible weight are dropped (see [`optimize_significant`]).
/// `env_prev` is the environment carried from the previous step; it seeds the
/// bootstrap bond environment built with the embedding of `A_in`.
pub fn self_consistent_update(
    a_in: &PepsTensor,
    b: &EnlargedTensor,
    cfg: &SelfConsistentConfig,
    env_prev: Option<&Environment>,
) -> Result<UpdateOutput> {
    cfg.validate()?;
    let k = b.bond_dim() / a_in.bond_dim();
    if k * a_in.bond_dim() != b.bond_dim() || cfg.d > b.bond_dim() {
        return Err(Error::dim(format_args!(
            "cannot truncate B bond {} from A bond {} to D={}",
            b.bond_dim(),
            a_in.bond_dim(),
            cfg.d
        )));
    }
    let mut diag = UpdateDiagnostics::default();

    // bootstrap with the s = 0 embedding and the stale environment
    let w_embed = Isometry::embedding(a_in.bond_dim(), k, cfg.d)?;
    let a0 = renormalize(b, &w_embed)?;
    let a0_t = transfer_tensor_a(&a0)?;
    let mut env = match env_prev {
        Some(e) if e.leg_dim() == a0_t.leg_dim() && e.is_converged() => e.clone(),
        _ => refresh_env(&a0_t, cfg, None)?.0,
    };
    let mut w = optimize_significant(&bond_env_for(&a0, b, &w_embed, &env)?, cfg.d)?.isometry;
    let mut w_prev = w_embed;

    for outer in 0..cfg.max_outer {
        let a_prime = renormalize(b, &w)?;
        // a change of rank leaves nothing to warm-start from
        let warm = if w_prev.output_dim() == w.output_dim() {
            Some(env.with_top(gauge_accelerate(env.top(), w_prev.matrix(), w.matrix())?))
        } else {
            None
        };
        let (e, iters) = refresh_env(&transfer_tensor_a(&a_prime)?, cfg, warm)?;
        env = e;
        let be = bond_env_for(&a_prime, b, &w, &env)?;
        let opt = optimize_significant(&be, cfg.d)?;
        let dist = opt.isometry.projector_distance(&w);
        debug!(
            "outer {}: merit {:e} retained {:.12} env iters {iters} |dP| {dist:e} spectrum {:?}",
            outer + 1,
            opt.merit,
            opt.retained_fraction(),
            opt.values
        );
        diag.merits.push(opt.merit);
        diag.retained.push(opt.retained_fraction());
        diag.env_iterations.push(iters);
        diag.projector_distances.push(dist);
        w_prev = w;
        w = opt.isometry;
        if dist < cfg.tol_w {
            let a = renormalize(b, &w)?;
            let scale = a.tensor().norm();
            return Ok(UpdateOutput {
                a: a.scaled(1.0 / scale),
                w,
                env,
                diagnostics: diag,
            });
        }
    }
    Err(Error::IsometryNotConverged {
        iterations: cfg.max_outer,
        distance: diag.projector_distances.last().copied().unwrap_or(f64::INFINITY),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::TrotterTensor;
    use crate::peps::{absorb_trotter, initial_tensor};

    #[test]
    fn identity_environment_picks_first_indices() {
        let e = BondEnvironment::new(Tensor::eye(4), EnvSource::Infinite).unwrap();
        let o = optimize_isometry(&e, 2).unwrap();
        assert!((o.merit - 2.0).abs() < 1e-14);
        let expect = Tensor::from_fn(&[4, 2], |ix| if ix[0] == ix[1] { 1.0 } else { 0.0 });
        assert!(o.isometry.matrix().max_diff(&expect) < 1e-14);
    }

    #[test]
    fn diagonal_environment() {
        let e = Tensor::from_fn(&[4, 4], |ix| if ix[0] == ix[1] { 4.0 - ix[0] as f64 } else { 0.0 });
        let o = optimize_isometry(&BondEnvironment::new(e, EnvSource::Infinite).unwrap(), 2).unwrap();
        assert!((o.merit - 7.0).abs() < 1e-14);
        assert!((o.retained_fraction() - 0.7).abs() < 1e-14);
        assert_eq!(o.isometry.matrix().get(&[0, 0]), 1.0);
        assert_eq!(o.isometry.matrix().get(&[1, 1]), 1.0);
    }

    #[test]
    fn projector_is_idempotent() {
        let w = Isometry::embedding(3, 2, 4).unwrap();
        let p = w.projector();
        let p2 = contract(&p, &p, &[(1, 0)]).unwrap();
        assert!(p2.max_diff(&p) < 1e-14);
        assert!(p.max_diff(&p.transpose().unwrap()) == 0.0);
    }

    #[test]
    fn embedding_layout() {
        let w = Isometry::embedding(2, 2, 3).unwrap();
        // columns: u=0 s=0 -> 0, u=1 s=0 -> 2, u=0 s=1 -> 1
        assert_eq!(w.matrix().get(&[0, 0]), 1.0);
        assert_eq!(w.matrix().get(&[2, 1]), 1.0);
        assert_eq!(w.matrix().get(&[1, 2]), 1.0);
        assert!(Isometry::embedding(2, 2, 5).is_err());
    }

    #[test]
    fn non_isometry_rejected() {
        let w = Tensor::matrix(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(Isometry::new(w).is_err());
    }

    #[test]
    fn trivial_embedding_recovers_source() {
        // D=1, W=(1,0)^T gives the s=0 block of B, i.e. cosh^2 * A
        let t = TrotterTensor::new(0.2).unwrap();
        let a = initial_tensor();
        let b = absorb_trotter(&a, &t).unwrap();
        let a2 = renormalize(&b, &Isometry::embedding(1, 2, 1).unwrap()).unwrap();
        let c2 = 0.1f64.cosh().powi(2);
        assert!(a2.tensor().max_diff(&a.scaled(c2).into_tensor()) < 1e-15);
    }

    #[test]
    fn vanishing_step_selects_zero_block() {
        let a = absorb_trotter(&initial_tensor(), &TrotterTensor::new(0.4).unwrap())
            .unwrap()
            .into_peps()
            .unwrap();
        let a = a.scaled(1.0 / a.tensor().max_abs());
        let b = absorb_trotter(&a, &TrotterTensor::new(1e-20).unwrap()).unwrap();
        let cfg = SelfConsistentConfig {
            d: 2,
            tol_w: 1e-8,
            max_outer: 20,
            ctm: CtmConfig::new(8, 1e-11, 1000).unwrap(),
            env_max_sweeps: None,
        };
        let out = self_consistent_update(&a, &b, &cfg, None).unwrap();
        assert!(out.diagnostics.outer_iterations() <= 2);
        let embed = Isometry::embedding(2, 2, 2).unwrap();
        assert!(
            out.w.projector_distance(&embed) < 1e-8,
            "{}",
            out.w.projector_distance(&embed)
        );
        // same state up to the bond gauge fixed by the embedding
        let back = renormalize(&b, &embed).unwrap();
        let back = back.scaled(1.0 / back.tensor().norm());
        let g = crate::ctmrg::procrustes(embed.matrix(), out.w.matrix()).unwrap();
        let rotated = renormalize_legs(back.tensor(), [Some(&g); 4]).unwrap();
        assert!(rotated.max_diff(out.a.tensor()) < 1e-10);
    }
}
