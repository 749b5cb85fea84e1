//! Corner matrix renormalization for an isotropic transfer tensor.
//!
//! One corner matrix `C` (`M x M`) and one top tensor `T` (`[M, q, M]`, middle
//! leg pointing into the lattice) describe all four corners and edges. The
//! transfer tensor `a` has axes `[u, r, d, l]`, each of extent `q`.
//!
//! Orientation used throughout: the upper-left corner is `C[x, y]` with `x`
//! running right along the top edge and `y` down along the left edge.

use crate::error::{Error, Result};
use crate::peps::TransferTensor;
use crate::renorm::{BondEnvironment, EnvSource};
use crate::tensor::{contract, symm_eig, Tensor};
use log::{debug, trace};

/// Relative gap below which two corner eigenvalues count as degenerate.
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CtmConfig {
    /// Environmental bond dimension.
    pub m: usize,
    /// Max-norm change of the normalized leading corner spectrum at convergence.
    pub tol_env: f64,
    pub max_iter: usize,
}

impl CtmConfig {
    pub fn new(m: usize, tol_env: f64, max_iter: usize) -> Result<Self> {
        let c = CtmConfig { m, tol_env, max_iter };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidArgument("M must be >= 1".into()));
        }
        if !(self.tol_env > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol_env must be > 0, got {}",
                self.tol_env
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for CtmConfig {
    fn default() -> Self {
        CtmConfig {
            m: 16,
            tol_env: 1e-10,
            max_iter: 2000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Environment {
    c: Tensor,
    t: Tensor,
    /// Leading corner spectrum from the last step, normalized by its largest
    /// magnitude.
    spectrum: Vec<f64>,
    /// Spectrum change per step.
    residuals: Vec<f64>,
    converged: bool,
    /// Steps where the truncation cut through a degenerate multiplet.
    degenerate_cuts: usize,
}

impl Environment {
    /// Builds an environment from explicit tensors; it counts as converged.
    pub fn from_parts(c: Tensor, t: Tensor) -> Result<Self> {
        if c.rank() != 2 || t.rank() != 3 || c.dim(0) != c.dim(1) || t.dim(0) != c.dim(0) || t.dim(2) != c.dim(0) {
            return Err(Error::dim(format_args!(
                "corner {:?} and top {:?} do not match",
                c.dims(),
                t.dims()
            )));
        }
        Ok(Environment {
            c,
            t,
            spectrum: Vec::new(),
            residuals: Vec::new(),
            converged: true,
            degenerate_cuts: 0,
        })
    }

    /// Open-boundary start: the outward legs of `a` are closed with the
    /// boundary vector `vec(I_D)` (`q = D^2`).
    pub fn cold_start(a: &TransferTensor) -> Result<Self> {
        let a = a.tensor();
        let q = a.dim(0);
        let v = boundary_vector(q)?;
        // C(r, d) = sum_{u,l} a(u,r,d,l) v_u v_l
        let au = contract(&v, a, &[(0, 0)])?; // [r, d, l]
        let c = contract(&au, &v, &[(2, 0)])?; // [r, d]
                                               // T(l, d, r) = sum_u a(u,r,d,l) v_u
        let t = au.permute(&[2, 1, 0])?;
        let mut env = Environment {
            c: symmetrize_matrix(&c)?,
            t: symmetrize_top(&t)?,
            spectrum: Vec::new(),
            residuals: Vec::new(),
            converged: false,
            degenerate_cuts: 0,
        };
        env.normalize();
        Ok(env)
    }

    pub fn corner(&self) -> &Tensor {
        &self.c
    }

    pub fn top(&self) -> &Tensor {
        &self.t
    }

    /// Current environmental bond dimension (may be below the configured `M`
    /// while the environment is still growing).
    pub fn m(&self) -> usize {
        self.c.dim(0)
    }

    /// Extent `q` of the top tensor's inward leg.
    pub fn leg_dim(&self) -> usize {
        self.t.dim(1)
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    pub fn degenerate_cuts(&self) -> usize {
        self.degenerate_cuts
    }

    pub(crate) fn with_top(&self, t: Tensor) -> Self {
        Environment {
            t,
            converged: false,
            residuals: Vec::new(),
            ..self.clone()
        }
    }

    pub(crate) fn restore(
        c: Tensor,
        t: Tensor,
        spectrum: Vec<f64>,
        converged: bool,
        degenerate_cuts: usize,
    ) -> Result<Self> {
        let mut env = Environment::from_parts(c, t)?;
        env.spectrum = spectrum;
        env.converged = converged;
        env.degenerate_cuts = degenerate_cuts;
        Ok(env)
    }

    /// Marks the environment as usable regardless of its last residual.
    pub(crate) fn accept(mut self) -> Self {
        self.converged = true;
        self
    }

    fn normalize(&mut self) {
        let cm = self.c.max_abs();
        if cm > 0.0 {
            self.c.scale(1.0 / cm);
        }
        let tm = self.t.max_abs();
        if tm > 0.0 {
            self.t.scale(1.0 / tm);
        }
    }

    fn check_against(&self, a: &TransferTensor) -> Result<()> {
        let ad = a.tensor().dims();
        if ad.iter().any(|&d| d != self.leg_dim()) {
            return Err(Error::dim(format_args!(
                "environment leg {} does not fit transfer tensor {:?}",
                self.leg_dim(),
                ad
            )));
        }
        Ok(())
    }

    fn require_converged(&self) -> Result<()> {
        if !self.converged {
            return Err(Error::EnvNotConverged {
                iterations: self.iterations(),
                residual: self.residuals.last().copied().unwrap_or(f64::INFINITY),
            });
        }
        Ok(())
    }
}

/// `vec(I_D)` as a length-`D^2` vector.
pub fn boundary_vector(q: usize) -> Result<Tensor> {
    let d = (q as f64).sqrt().round() as usize;
    if d * d != q {
        return Err(Error::dim(format_args!("leg extent {q} is not a square D^2")));
    }
    Ok(Tensor::from_fn(
        &[q],
        |ix| if ix[0] / d == ix[0] % d { 1.0 } else { 0.0 },
    ))
}

fn symmetrize_matrix(m: &Tensor) -> Result<Tensor> {
    let mut s = m.clone();
    s.axpy(1.0, &m.transpose()?)?;
    Ok(s.scaled(0.5))
}

fn symmetrize_top(t: &Tensor) -> Result<Tensor> {
    let mut s = t.clone();
    s.axpy(1.0, &t.permute(&[2, 1, 0])?)?;
    Ok(s.scaled(0.5))
}

/// Enlarged corner `C''[(x', r), (y', d)]` as an `Mq x Mq` matrix.
pub fn enlarged_corner(env: &Environment, a: &TransferTensor) -> Result<Tensor> {
    let (m, q) = (env.m(), env.leg_dim());
    let ct = contract(&env.c, &env.t, &[(0, 0)])?; // [y, u, x']
    let ctt = contract(&ct, &env.t, &[(0, 0)])?; // [u, x', l, y']
    let c2 = contract(&ctt, a.tensor(), &[(0, 0), (2, 3)])?; // [x', y', r, d]
    c2.permute(&[0, 2, 1, 3])?.reshape(&[m * q, m * q])
}

/// One renormalization step: enlarge the corner, diagonalize it, keep the `M`
/// leading eigenvectors as isometry `Z`, and renormalize corner and top.
pub fn ctm_step(env: &Environment, a: &TransferTensor, cfg: &CtmConfig) -> Result<Environment> {
    env.check_against(a)?;
    let (m, q) = (env.m(), env.leg_dim());
    let c2 = symmetrize_matrix(&enlarged_corner(env, a)?)?;
    let eig = symm_eig(&c2)?;
    let n = m * q;
    let keep = cfg.m.min(n);

    // leading by magnitude; a stable sort keeps the eigensolver's order on ties
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.values[j].abs().total_cmp(&eig.values[i].abs()));
    let lmax = eig.values[order[0]].abs();
    if !(lmax > 0.0) || !lmax.is_finite() {
        return Err(Error::NoConvergence { routine: "ctm_step" });
    }
    let mut degenerate_cuts = env.degenerate_cuts;
    if keep < n {
        let (last, next) = (eig.values[order[keep - 1]].abs(), eig.values[order[keep]].abs());
        if (last - next) <= DEGENERACY_TOL * lmax {
            degenerate_cuts += 1;
            debug!("corner truncation at M={keep} splits a degenerate multiplet ({last:e})");
        }
    }
    let kept = &order[..keep];
    let z = Tensor::from_fn(&[n, keep], |ix| eig.vectors.get(&[ix[0], kept[ix[1]]]));
    let spectrum: Vec<f64> = kept.iter().map(|&k| eig.values[k] / lmax).collect();
    let c = Tensor::from_fn(&[keep, keep], |ix| if ix[0] == ix[1] { spectrum[ix[0]] } else { 0.0 });

    // T'(v1, s, v2) = sum Z[(x,l),v1] T(x,u,y) a(u,r,s,l) Z[(y,r),v2]
    let ta = contract(&env.t, a.tensor(), &[(1, 0)])?; // [x, y, r, s, l]
    let ta = ta.permute(&[0, 4, 3, 1, 2])?.reshape(&[n, q, n])?;
    let t = ta.apply_axis(0, &z)?.apply_axis(2, &z)?;
    let t = symmetrize_top(&t)?;

    let residual = if env.spectrum.len() == spectrum.len() {
        env.spectrum
            .iter()
            .zip(&spectrum)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let mut residuals = env.residuals.clone();
    residuals.push(residual);
    let mut out = Environment {
        c,
        t,
        spectrum,
        residuals,
        converged: false,
        degenerate_cuts,
    };
    out.normalize();
    Ok(out)
}

/// Iterates [`ctm_step`] from `init` (or a cold start) until the leading corner
/// spectrum changes by less than `tol_env`.
pub fn converge_env(a: &TransferTensor, cfg: &CtmConfig, init: Option<Environment>) -> Result<Environment> {
    cfg.validate()?;
    let mut env = match init {
        Some(e) if e.leg_dim() == a.leg_dim() => Environment {
            residuals: Vec::new(),
            converged: false,
            ..e
        },
        _ => Environment::cold_start(a)?,
    };
    let start = env.residuals.len();
    for _ in 0..cfg.max_iter {
        env = ctm_step(&env, a, cfg)?;
        let r = *env.residuals.last().unwrap();
        trace!(
            "ctm iteration {}: M={} residual {r:e}",
            env.residuals.len() - start,
            env.m()
        );
        if r < cfg.tol_env {
            env.converged = true;
            return Ok(env);
        }
    }
    Err(Error::EnvNotConverged {
        iterations: cfg.max_iter,
        residual: env.residuals.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Orthogonal `G` minimizing `||W_new - W_old G||_F` (both `kD x D`).
pub fn procrustes(w_old: &Tensor, w_new: &Tensor) -> Result<Tensor> {
    if w_old.dims() != w_new.dims() || w_old.rank() != 2 {
        return Err(Error::dim(format_args!(
            "isometries {:?} and {:?} differ",
            w_old.dims(),
            w_new.dims()
        )));
    }
    let m = contract(w_old, w_new, &[(0, 0)])?;
    let s = crate::tensor::svd(&m)?;
    contract(&s.u, &s.v, &[(1, 1)])
}

/// Applies `G` to both factors of the top tensor's fused `D x D` leg.
pub fn gauge_transform_top(t: &Tensor, g: &Tensor) -> Result<Tensor> {
    let d = g.dim(0);
    let (m1, q, m2) = (t.dim(0), t.dim(1), t.dim(2));
    if q != d * d || g.dim(1) != d {
        return Err(Error::dim(format_args!(
            "gauge {:?} does not act on top leg {q}",
            g.dims()
        )));
    }
    let split = t.clone().reshape(&[m1, d, d, m2])?;
    split.apply_axis(1, g)?.apply_axis(2, g)?.reshape(&[m1, q, m2])
}

/// Warm-start top tensor for the bond after its isometry changed from
/// `w_old` to `w_new`.
pub fn gauge_accelerate(t: &Tensor, w_old: &Tensor, w_new: &Tensor) -> Result<Tensor> {
    gauge_transform_top(t, &procrustes(w_old, w_new)?)
}

/// Left column `C T C` with axes `[top env, l, bottom env]`.
pub fn left_column(env: &Environment) -> Result<Tensor> {
    let ct = contract(&env.c, &env.t, &[(1, 0)])?; // [x, l, y]
    contract(&ct, &env.c, &[(2, 0)])
}

/// Pushes a column vector `v[x_top, l, x_bot]` through one column of
/// `T_top, x, T_bot`, where `x` has axes `[u, r, d, l]` and the `r` leg may be
/// wider than `l`. Result axes are `[y_top, r, y_bot]`.
pub fn column_transfer(env: &Environment, v: &Tensor, x: &Tensor) -> Result<Tensor> {
    let vt = contract(v, &env.t, &[(0, 0)])?; // [l, x_bot, u, y_top]
    let vtt = contract(&vt, &env.t, &[(1, 0)])?; // [l, u, y_top, d, y_bot]
    let out = contract(&vtt, x, &[(0, 3), (1, 0), (3, 2)])?; // [y_top, y_bot, r]
    out.permute(&[0, 2, 1])
}

/// Value of the 3x3 network (corners, tops, `x` in the middle).
pub fn network_3x3(env: &Environment, x: &Tensor) -> Result<f64> {
    let l = left_column(env)?;
    let h = column_transfer(env, &l, x)?;
    h.dot(&l)
}

/// Norm per site `Z_1 Z_0 / Z_10^2` of the infinite network of `a`.
pub fn norm_per_site(env: &Environment, a: &TransferTensor) -> Result<f64> {
    env.require_converged()?;
    env.check_against(a)?;
    let l = left_column(env)?;
    let z1 = column_transfer(env, &l, a.tensor())?.dot(&l)?;
    let z10 = l.dot(&l)?;
    let c2 = contract(&env.c, &env.c, &[(1, 0)])?;
    let z0 = c2.dot(&c2)?;
    let kappa = z1 * z0 / (z10 * z10);
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::NoConvergence {
            routine: "norm_per_site",
        });
    }
    Ok(kappa)
}

/// Half of the two-site window: `left column, T_top, b, T_bot`, with `b`'s
/// right leg open and split as `(bra, ket)`. Axes `[y_top, y_bot, bra, ket]`.
fn half_window(env: &Environment, b: &Tensor, ket_dim: usize) -> Result<Tensor> {
    let l = left_column(env)?;
    let h = column_transfer(env, &l, b)?; // [y_top, open, y_bot]
    let (m1, open, m2) = (h.dim(0), h.dim(1), h.dim(2));
    let h = h.permute(&[0, 2, 1])?;
    h.reshape(&[m1, m2, open / ket_dim, ket_dim])
}

/// Bond environment of a horizontal bond from the minimal two-site window:
/// `b_left` has its right leg open, `b_right` its left leg open, both fused as
/// `bra * D + ket`.
pub fn bond_environment(env: &Environment, b_left: &Tensor, b_right: &Tensor) -> Result<BondEnvironment> {
    env.require_converged()?;
    if b_left.rank() != 4 || b_right.rank() != 4 {
        return Err(Error::dim(format_args!("b tensors must have rank 4")));
    }
    let q = b_left.dim(0);
    if q != env.leg_dim() || b_right.dim(0) != q {
        return Err(Error::dim(format_args!(
            "b legs {q} do not match environment leg {}",
            env.leg_dim()
        )));
    }
    let ket = (q as f64).sqrt().round() as usize;
    if ket * ket != q || b_left.dim(1) % ket != 0 || b_left.dim(1) != b_right.dim(3) {
        return Err(Error::dim(format_args!(
            "open legs {} / {} do not match D={ket}",
            b_left.dim(1),
            b_right.dim(3)
        )));
    }
    let hl = half_window(env, b_left, ket)?;
    // mirror the right site so its open leg points right
    let br = b_right.permute(&[0, 3, 2, 1])?;
    let hr = half_window(env, &br, ket)?;
    let e = contract(&hl, &hr, &[(0, 0), (1, 1), (3, 3)])?;
    BondEnvironment::new(symmetrize_matrix(&e)?, EnvSource::Infinite)
}
