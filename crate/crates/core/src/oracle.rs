//! Brute-force references: dense matrix exponentials, purified state vectors
//! on small open lattices, and exact diagonalization of `exp(-beta H)`.
//!
//! None of this goes through the PEPS machinery; it exists to check it.
//!
//! Purified state vectors order sites row-major and, within a site, the spin
//! digit before the ancilla digit, matching [`crate::finite::exact_contract`].

use crate::error::{Error, Result};
use crate::ising::{pauli_x, pauli_z, ModelParams};
use crate::tensor::{matmul, symm_eig, Tensor};

pub fn kron(a: &Tensor, b: &Tensor) -> Tensor {
    let (ar, ac) = (a.dim(0), a.dim(1));
    let (br, bc) = (b.dim(0), b.dim(1));
    Tensor::from_fn(&[ar * br, ac * bc], |ix| {
        a.get(&[ix[0] / br, ix[1] / bc]) * b.get(&[ix[0] % br, ix[1] % bc])
    })
}

/// `exp(m)` by scaling and squaring of a truncated Taylor series.
pub fn dense_expm(m: &Tensor) -> Tensor {
    let n = m.dim(0);
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| m.get(&[i, j]).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm1 * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m.clone().scaled(scale);
    let mut result = Tensor::eye(n);
    let mut term = Tensor::eye(n);
    for k in 1..=24 {
        term = matmul(&term, &a).unwrap().scaled(1.0 / k as f64);
        result.axpy(1.0, &term).unwrap();
    }
    for _ in 0..squarings {
        result = matmul(&result, &result).unwrap();
    }
    result
}

/// Open `rows x cols` square lattice with row-major site numbering.
#[derive(Clone, Copy, Debug)]
pub struct Geometry {
    pub rows: usize,
    pub cols: usize,
}

impl Geometry {
    pub fn square(n: usize) -> Self {
        Geometry { rows: n, cols: n }
    }

    pub fn sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn site(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    /// Nearest-neighbour bonds as site pairs.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut b = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c + 1 < self.cols {
                    b.push((self.site(r, c), self.site(r, c + 1)));
                }
                if r + 1 < self.rows {
                    b.push((self.site(r, c), self.site(r + 1, c)));
                }
            }
        }
        b
    }
}

const STATE_LIMIT: u128 = 1 << 24;

/// Purified infinite-temperature state `prod_m (|00> + |11>)`, unnormalized.
pub fn purified_initial(geom: Geometry) -> Result<Vec<f64>> {
    let n = geom.sites();
    let len = 1u128 << (2 * n);
    if len > STATE_LIMIT {
        return Err(Error::SizeLimit {
            what: "purified state vector",
            requested: len,
            limit: STATE_LIMIT,
        });
    }
    let mut psi = vec![0.0; len as usize];
    for mask in 0..(1usize << n) {
        psi[diag_index(mask, n)] = 1.0;
    }
    Ok(psi)
}

/// Index of the basis state with spin == ancilla == bit of `mask` on every
/// site (site 0 is the most significant bit of `mask`).
fn diag_index(mask: usize, n: usize) -> usize {
    let mut idx = 0;
    for s in 0..n {
        let bit = (mask >> (n - 1 - s)) & 1;
        idx = idx * 4 + bit * 3;
    }
    idx
}

fn spin_of(idx: usize, n: usize, site: usize) -> usize {
    // digit (spin,ancilla) for `site`, spin is the high bit
    (idx >> (2 * (n - 1 - site) + 1)) & 1
}

/// Applies a 2x2 operator to the spin of `site` in a purified state.
pub fn apply_spin_op(psi: &[f64], n: usize, site: usize, op: &Tensor) -> Vec<f64> {
    let bit = 1usize << (2 * (n - 1 - site) + 1);
    let mut out = vec![0.0; psi.len()];
    for (idx, &amp) in psi.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        let j = spin_of(idx, n, site);
        for i in 0..2 {
            let w = op.get(&[i, j]);
            if w != 0.0 {
                let target = if i == j { idx } else { idx ^ bit };
                out[target] += w * amp;
            }
        }
    }
    out
}

/// `U_ZZ(dbeta) = prod_bonds exp((dbeta/2) Z Z)` on a purified state.
pub fn apply_zz_gate(psi: &[f64], geom: Geometry, dbeta: f64) -> Vec<f64> {
    let n = geom.sites();
    let bonds = geom.bonds();
    psi.iter()
        .enumerate()
        .map(|(idx, &amp)| {
            let e: f64 = bonds
                .iter()
                .map(|&(p, q)| {
                    let zp = 1.0 - 2.0 * spin_of(idx, n, p) as f64;
                    let zq = 1.0 - 2.0 * spin_of(idx, n, q) as f64;
                    zp * zq
                })
                .sum();
            amp * (0.5 * dbeta * e).exp()
        })
        .collect()
}

/// Exact `exp((dbeta/4)(h X + delta Z))` on every spin.
pub fn apply_field_half(psi: &[f64], geom: Geometry, params: &ModelParams) -> Vec<f64> {
    let mut gen = pauli_x().scaled(params.h);
    gen.axpy(params.delta, &pauli_z()).unwrap();
    let u = dense_expm(&gen.scaled(0.25 * params.dbeta));
    (0..geom.sites()).fold(psi.to_vec(), |acc, s| apply_spin_op(&acc, geom.sites(), s, &u))
}

/// One second-order Trotter step `U_X(dbeta/2) U_ZZ(dbeta) U_X(dbeta/2)`.
pub fn trotter_step(psi: &[f64], geom: Geometry, params: &ModelParams) -> Vec<f64> {
    let a = apply_field_half(psi, geom, params);
    let b = apply_zz_gate(&a, geom, params.dbeta);
    apply_field_half(&b, geom, params)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `<psi| O_1 O_2 .. |psi> / <psi|psi>` for spin operators on distinct sites.
pub fn purified_expectation(psi: &[f64], n: usize, ops: &[(usize, Tensor)]) -> f64 {
    let phi = ops
        .iter()
        .fold(psi.to_vec(), |acc, (s, op)| apply_spin_op(&acc, n, *s, op));
    dot(psi, &phi) / dot(psi, psi)
}

/// Thermal state `exp(-beta H) / Z` of the transverse-field Ising model on a
/// small open lattice, by dense diagonalization in the spin basis.
pub struct ThermalEd {
    n: usize,
    weights: Vec<f64>,
    vectors: Tensor,
}

impl ThermalEd {
    pub fn new(geom: Geometry, h: f64, delta: f64, beta: f64) -> Result<Self> {
        let n = geom.sites();
        if n > 12 {
            return Err(Error::SizeLimit {
                what: "exact diagonalization",
                requested: 1 << n,
                limit: 1 << 12,
            });
        }
        let dim = 1usize << n;
        let bonds = geom.bonds();
        let mut ham = Tensor::zeros(&[dim, dim]);
        for s in 0..dim {
            let z = |site: usize| 1.0 - 2.0 * ((s >> (n - 1 - site)) & 1) as f64;
            let diag: f64 = -bonds.iter().map(|&(p, q)| z(p) * z(q)).sum::<f64>() - delta * (0..n).map(z).sum::<f64>();
            ham.set(&[s, s], diag);
            for site in 0..n {
                let t = s ^ (1 << (n - 1 - site));
                ham.set(&[t, s], ham.get(&[t, s]) - h);
            }
        }
        let eig = symm_eig(&ham)?;
        let emin = *eig.values.last().unwrap();
        let mut weights: Vec<f64> = eig.values.iter().map(|e| (-beta * (e - emin)).exp()).collect();
        let z: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= z);
        Ok(ThermalEd {
            n,
            weights,
            vectors: eig.vectors,
        })
    }

    /// `Tr(rho O_1 O_2 ..)` for 2x2 spin operators on distinct sites.
    pub fn expectation(&self, ops: &[(usize, Tensor)]) -> f64 {
        let dim = 1usize << self.n;
        let mut total = 0.0;
        for (k, &w) in self.weights.iter().enumerate() {
            if w < 1e-300 {
                continue;
            }
            let v: Vec<f64> = (0..dim).map(|i| self.vectors.get(&[i, k])).collect();
            let mut phi = v.clone();
            for (site, op) in ops {
                let bit = 1usize << (self.n - 1 - site);
                let mut next = vec![0.0; dim];
                for (idx, &amp) in phi.iter().enumerate() {
                    let j = (idx & bit != 0) as usize;
                    for i in 0..2 {
                        let target = if i == j { idx } else { idx ^ bit };
                        next[target] += op.get(&[i, j]) * amp;
                    }
                }
                phi = next;
            }
            total += w * dot(&v, &phi);
        }
        total
    }
}
