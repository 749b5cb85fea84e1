//! Open-boundary `N x N` lattices: per-bond isometries, boundary-MPS bond
//! environments and symmetry-reduced sweeps.

mod evolve;
mod exact;
mod mps;

pub use evolve::{
    evolve_finite, sample_correlators, CorrelatorRow, FiniteEvolutionConfig, FiniteSink, FiniteState, NullFiniteSink,
    CORRELATOR_HEADER,
};
pub use exact::{exact_contract, overlap};
pub use mps::{bond_halves, boundary_contract, contract_grid, BoundaryMps, Grid};

use crate::error::{Error, Result};
use crate::ising::{field_halfstep_matrix, ModelParams, TrotterTensor};
use crate::peps::{
    absorb_trotter_masked, apply_spin_operator, double_layer, initial_tensor, renormalize_legs, Direction,
    EnlargedTensor, PepsTensor,
};
use crate::renorm::{optimize_significant, BondEnvironment, EnvSource, Isometry};
use crate::tensor::{contract, Tensor};
use log::debug;

/// Nearest-neighbour bond from site `(row, col)` to its right (`horizontal`)
/// or lower neighbour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bond {
    pub row: usize,
    pub col: usize,
    pub horizontal: bool,
}

impl Bond {
    pub fn ends(&self) -> ((usize, usize), (usize, usize)) {
        let far = if self.horizontal {
            (self.row, self.col + 1)
        } else {
            (self.row + 1, self.col)
        };
        ((self.row, self.col), far)
    }
}

/// All bonds in sweep order: horizontal bonds row-major, then vertical ones.
pub fn lattice_bonds(n: usize) -> Vec<Bond> {
    let mut out = Vec::with_capacity(2 * n * n.saturating_sub(1));
    for horizontal in [true, false] {
        for row in 0..n {
            for col in 0..n {
                let fits = if horizontal { col + 1 < n } else { row + 1 < n };
                if fits {
                    out.push(Bond { row, col, horizontal });
                }
            }
        }
    }
    out
}

fn bond_of_sites(a: (usize, usize), b: (usize, usize)) -> Bond {
    let (p, q) = if a < b { (a, b) } else { (b, a) };
    Bond {
        row: p.0,
        col: p.1,
        horizontal: p.0 == q.0,
    }
}

/// Bond orbits under the eight symmetries of the square, as indices into
/// [`lattice_bonds`]. Each orbit is sorted, so its first entry (a horizontal
/// bond) is the representative; orbits are ordered by representative.
pub fn symmetry_orbits(n: usize) -> Vec<Vec<usize>> {
    let bonds = lattice_bonds(n);
    let m = n - 1;
    let maps: [fn((usize, usize), usize) -> (usize, usize); 8] = [
        |(r, c), _| (r, c),
        |(r, c), m| (c, m - r),
        |(r, c), m| (m - r, m - c),
        |(r, c), m| (m - c, r),
        |(r, c), m| (r, m - c),
        |(r, c), m| (m - r, c),
        |(r, c), _| (c, r),
        |(r, c), m| (m - c, m - r),
    ];
    let mut seen = vec![false; bonds.len()];
    let mut orbits = Vec::new();
    for i in 0..bonds.len() {
        if seen[i] {
            continue;
        }
        let (a, b) = bonds[i].ends();
        let mut orbit: Vec<usize> = maps
            .iter()
            .map(|g| {
                let img = bond_of_sites(g(a, m), g(b, m));
                bonds.iter().position(|x| *x == img).expect("image is a bond")
            })
            .collect();
        orbit.sort_unstable();
        orbit.dedup();
        for &j in &orbit {
            seen[j] = true;
        }
        orbits.push(orbit);
    }
    orbits
}

/// Finite PEPS with one isometry per bond. Boundary legs have extent 1.
#[derive(Clone, Debug)]
pub struct FiniteLattice {
    n: usize,
    sites: Vec<PepsTensor>,
    /// Last isometry applied on each bond (identity while untruncated), in
    /// [`lattice_bonds`] order.
    isometries: Vec<Isometry>,
    m_mps: usize,
}

impl FiniteLattice {
    /// Infinite-temperature purification, `D = 1`.
    pub fn initial(n: usize, m_mps: usize) -> Result<Self> {
        if n == 0 || m_mps == 0 {
            return Err(Error::InvalidArgument(format!(
                "need N >= 1 and M_mps >= 1, got {n}, {m_mps}"
            )));
        }
        let one = Isometry::new(Tensor::eye(1))?;
        Ok(FiniteLattice {
            n,
            sites: vec![initial_tensor(); n * n],
            isometries: vec![one; lattice_bonds(n).len()],
            m_mps,
        })
    }

    /// Lattice from explicit parts; shapes must agree bond by bond.
    pub fn from_parts(n: usize, sites: Vec<PepsTensor>, isometries: Vec<Isometry>, m_mps: usize) -> Result<Self> {
        let lat = FiniteLattice {
            n,
            sites,
            isometries,
            m_mps,
        };
        lat.check()?;
        Ok(lat)
    }

    fn check(&self) -> Result<()> {
        let n = self.n;
        if self.sites.len() != n * n || self.isometries.len() != lattice_bonds(n).len() || self.m_mps == 0 {
            return Err(Error::dim(format_args!("inconsistent {n}x{n} lattice")));
        }
        for r in 0..n {
            for c in 0..n {
                let a = &self.sites[r * n + c];
                for dir in Direction::ALL {
                    let want = match self.bond_at(r, c, dir) {
                        Some(b) => self.isometries[b].output_dim(),
                        None => 1,
                    };
                    if a.leg_dim(dir) != want {
                        return Err(Error::dim(format_args!(
                            "site ({r},{c}) leg {dir:?} has extent {}, expected {want}",
                            a.leg_dim(dir)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_mps(&self) -> usize {
        self.m_mps
    }

    pub fn set_m_mps(&mut self, m: usize) {
        self.m_mps = m.max(1);
    }

    pub fn site(&self, r: usize, c: usize) -> &PepsTensor {
        &self.sites[r * self.n + c]
    }

    pub fn sites(&self) -> &[PepsTensor] {
        &self.sites
    }

    pub fn isometries(&self) -> &[Isometry] {
        &self.isometries
    }

    /// Largest interior bond extent.
    pub fn max_bond_dim(&self) -> usize {
        self.isometries.iter().map(|w| w.output_dim()).max().unwrap_or(1)
    }

    /// Index (in [`lattice_bonds`] order) of the bond on leg `dir` of site
    /// `(r, c)`, or `None` on the boundary.
    pub fn bond_at(&self, r: usize, c: usize, dir: Direction) -> Option<usize> {
        let n = self.n;
        let nh = n * (n - 1);
        match dir {
            Direction::Right if c + 1 < n => Some(r * (n - 1) + c),
            Direction::Left if c > 0 => Some(r * (n - 1) + c - 1),
            Direction::Down if r + 1 < n => Some(nh + r * n + c),
            Direction::Up if r > 0 => Some(nh + (r - 1) * n + c),
            _ => None,
        }
    }

    fn interior_legs(&self, r: usize, c: usize) -> [bool; 4] {
        Direction::ALL.map(|d| self.bond_at(r, c, d).is_some())
    }

    /// Double-layer network `<psi| ops |psi>`, `ops` given as
    /// `(row-major site, 2x2 operator)`.
    pub fn network(&self, ops: &[(usize, &Tensor)]) -> Result<Grid> {
        let mut cells = Vec::with_capacity(self.sites.len());
        for (s, a) in self.sites.iter().enumerate() {
            let op = ops.iter().find(|o| o.0 == s).map(|o| o.1);
            if ops.iter().filter(|o| o.0 == s).count() > 1 {
                return Err(Error::InvalidArgument(format!("two operators on site {s}")));
            }
            cells.push(double_layer(a.tensor(), a.tensor(), op)?);
        }
        Grid::new(self.n, self.n, cells)
    }

    /// `<psi|psi>` by boundary MPS, as `(mantissa, log_scale)`.
    pub fn norm(&self) -> Result<(f64, f64)> {
        contract_grid(&self.network(&[])?, self.m_mps)
    }

    /// `<psi| O_1 O_2 .. |psi> / <psi|psi>`.
    pub fn expectation(&self, ops: &[(usize, Tensor)]) -> Result<f64> {
        let refs: Vec<(usize, &Tensor)> = ops.iter().map(|(s, o)| (*s, o)).collect();
        let (v0, l0) = self.norm()?;
        let (v1, l1) = contract_grid(&self.network(&refs)?, self.m_mps)?;
        Ok(v1 / v0 * (l1 - l0).exp())
    }

    /// Dense state vector (small lattices only).
    pub fn state_vector(&self) -> Result<Vec<f64>> {
        exact_contract(self.n, &self.sites)
    }

    /// Applies a one-site operator to every spin.
    pub fn apply_field(&mut self, u: &Tensor) -> Result<()> {
        for a in &mut self.sites {
            *a = apply_spin_operator(a, u)?;
        }
        Ok(())
    }

    /// Gate-enlarged tensors; boundary legs stay at extent 1.
    pub fn absorb(&self, gate: &TrotterTensor) -> Result<Vec<EnlargedTensor>> {
        let n = self.n;
        (0..n * n)
            .map(|s| absorb_trotter_masked(&self.sites[s], gate, self.interior_legs(s / n, s % n)))
            .collect()
    }

    /// Lattice of `b` with every interior leg mapped through its bond's
    /// isometry (no normalization).
    pub fn projected(&self, b: &[EnlargedTensor], w: &[Isometry]) -> Result<FiniteLattice> {
        if b.len() != self.sites.len() || w.len() != self.isometries.len() {
            return Err(Error::dim(format_args!(
                "{} B tensors and {} isometries",
                b.len(),
                w.len()
            )));
        }
        let sites = self
            .renormalized(b, w, None)?
            .into_iter()
            .map(PepsTensor::new)
            .collect::<Result<Vec<_>>>()?;
        FiniteLattice::from_parts(self.n, sites, w.to_vec(), self.m_mps)
    }

    /// Site tensors obtained by mapping every interior leg of `b` through its
    /// bond's isometry, except the legs of bond `skip`.
    fn renormalized(&self, b: &[EnlargedTensor], w: &[Isometry], skip: Option<usize>) -> Result<Vec<Tensor>> {
        let n = self.n;
        (0..n * n)
            .map(|s| {
                let maps = Direction::ALL.map(|d| match self.bond_at(s / n, s % n, d) {
                    Some(k) if Some(k) != skip => Some(w[k].matrix()),
                    _ => None,
                });
                renormalize_legs(b[s].tensor(), maps)
            })
            .collect()
    }
}

/// Bond environment of bond `bond` (index into [`lattice_bonds`]) for
/// gate-enlarged tensors `b` and per-bond isometries `w`: the bra is `b` with
/// every leg but the open bond renormalized, the ket is fully renormalized.
///
/// Returns the symmetrized matrix scaled to unit largest entry and the log
/// of the removed scale.
pub fn finite_bond_environment(
    lat: &FiniteLattice,
    b: &[EnlargedTensor],
    w: &[Isometry],
    bond: usize,
) -> Result<(BondEnvironment, f64)> {
    let bonds = lattice_bonds(lat.n);
    let target = *bonds
        .get(bond)
        .ok_or_else(|| Error::InvalidArgument(format!("no bond {bond} on a {}x{} lattice", lat.n, lat.n)))?;
    if b.len() != lat.sites.len() || w.len() != bonds.len() {
        return Err(Error::dim(format_args!(
            "{} B tensors and {} isometries",
            b.len(),
            w.len()
        )));
    }
    let ket = lat.renormalized(b, w, None)?;
    let bra = lat.renormalized(b, w, Some(bond))?;
    let cells = bra
        .iter()
        .zip(&ket)
        .map(|(x, y)| double_layer(x, y, None))
        .collect::<Result<Vec<_>>>()?;
    let mut grid = Grid::new(lat.n, lat.n, cells)?;
    let (r, c) = if target.horizontal {
        (target.row, target.col)
    } else {
        grid = grid.transpose()?;
        (target.col, target.row)
    };
    let (left, right, log) = bond_halves(&grid, r, c, lat.m_mps)?;
    let kd = w[bond].input_dim();
    let dk = w[bond].output_dim();
    let split = |t: Tensor| -> Result<Tensor> {
        let (a, bb) = (t.dim(0), t.dim(2));
        t.reshape(&[a, kd, dk, bb])
    };
    let mut e = contract(&split(left)?, &split(right)?, &[(0, 0), (2, 2), (3, 3)])?;
    let et = e.transpose()?;
    e.axpy(1.0, &et)?;
    e.scale(0.5);
    let s = e.max_abs();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::NoConvergence {
            routine: "finite bond environment",
        });
    }
    e.scale(1.0 / s);
    Ok((BondEnvironment::new(e, EnvSource::Finite)?, log + s.ln()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepConfig {
    /// Target bond dimension.
    pub d: usize,
    /// Largest per-bond projector change at convergence.
    pub tol_w: f64,
    pub max_sweeps: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.max_sweeps == 0 || !(self.tol_w > 0.0) {
            return Err(Error::InvalidArgument(format!("bad sweep settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepReport {
    pub sweeps: usize,
    /// Retained fraction of each optimized representative, in visiting order.
    pub merits: Vec<f64>,
    pub max_change: f64,
}

impl SweepReport {
    /// Smallest retained fraction of the final sweep.
    pub fn worst_merit(&self, orbits: usize) -> f64 {
        let tail = &self.merits[self.merits.len().saturating_sub(orbits)..];
        tail.iter().copied().fold(1.0, f64::min)
    }
}

/// Truncates the gate-enlarged tensors `b` back to bond dimension `cfg.d`.
///
/// Bonds whose enlarged extent already fits keep it. The others are optimized
/// one symmetry orbit at a time (representative in sweep order, result copied
/// to the rest of the orbit) until no projector moves by more than `tol_w`.
/// A bond keeps fewer than `d` states when its environment has fewer
/// non-negligible eigenvalues. Site tensors are normalized afterwards.
pub fn sweep_update(lat: &mut FiniteLattice, b: &[EnlargedTensor], cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let n = lat.n;
    let orbits = symmetry_orbits(n);
    let mut w = Vec::with_capacity(lat.isometries.len());
    for (k, old) in lat.isometries.iter().enumerate() {
        let bond = lattice_bonds(n)[k];
        let (p, _) = bond.ends();
        let dir = if bond.horizontal {
            Direction::Right
        } else {
            Direction::Down
        };
        let big = b[p.0 * n + p.1].leg_dim(dir);
        let factor = big / old.output_dim();
        w.push(if big <= cfg.d {
            Isometry::new(Tensor::eye(big))?
        } else {
            Isometry::embedding(old.output_dim(), factor, cfg.d)?
        });
    }
    let active: Vec<&Vec<usize>> = orbits
        .iter()
        .filter(|o| w[o[0]].output_dim() < w[o[0]].input_dim())
        .collect();

    let mut report = SweepReport::default();
    let mut converged = active.is_empty();
    while !converged {
        if report.sweeps == cfg.max_sweeps {
            return Err(Error::IsometryNotConverged {
                iterations: report.sweeps,
                distance: report.max_change,
            });
        }
        report.sweeps += 1;
        report.max_change = 0.0;
        for orbit in &active {
            let rep = orbit[0];
            let (e, _) = finite_bond_environment(lat, b, &w, rep)?;
            let opt = optimize_significant(&e, cfg.d)?;
            let change = if opt.isometry.output_dim() == w[rep].output_dim() {
                opt.isometry.projector_distance(&w[rep])
            } else {
                f64::INFINITY
            };
            report.max_change = report.max_change.max(change);
            report.merits.push(opt.retained_fraction());
            for &j in orbit.iter() {
                w[j] = opt.isometry.clone();
            }
        }
        debug!(
            "sweep {}: max projector change {:.3e}",
            report.sweeps, report.max_change
        );
        converged = report.max_change < cfg.tol_w;
    }

    let sites = lat.renormalized(b, &w, None)?;
    lat.sites = sites
        .into_iter()
        .map(|t| {
            let s = t.norm();
            PepsTensor::new(t.scaled(1.0 / s))
        })
        .collect::<Result<_>>()?;
    lat.isometries = w;
    Ok(report)
}

/// One second-order Trotter step on the finite lattice.
pub fn finite_step(lat: &mut FiniteLattice, params: &ModelParams, cfg: &SweepConfig) -> Result<SweepReport> {
    let u = field_halfstep_matrix(params);
    lat.apply_field(&u)?;
    let b = lat.absorb(&TrotterTensor::new(params.dbeta)?)?;
    let report = sweep_update(lat, &b, cfg)?;
    lat.apply_field(&u)?;
    for a in &mut lat.sites {
        let s = a.tensor().norm();
        *a = a.scaled(1.0 / s);
    }
    Ok(report)
}
