//! Symmetric eigendecomposition and SVD with a fixed ordering and sign gauge.
//!
//! Sign convention for every eigen/singular vector: its largest-magnitude entry
//! is positive, ties (within a relative 1e-12) going to the lowest index.

use super::Tensor;
use crate::error::{Error, Result};
use faer::{Mat, Side};

const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct SymmEig {
    pub values: Vec<f64>,
    /// `n x n`, column `k` pairs with `values[k]`.
    pub vectors: Tensor,
}

/// Thin SVD `m = u diag(s) v^T` with `s` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Tensor,
    pub s: Vec<f64>,
    pub v: Tensor,
}

fn as_square(m: &Tensor) -> Result<usize> {
    if m.rank() != 2 || m.dim(0) != m.dim(1) {
        return Err(Error::dim(format_args!("expected a square matrix, got {:?}", m.dims())));
    }
    Ok(m.dim(0))
}

/// Largest `|m - m^T|` entry.
pub(crate) fn asymmetry(m: &Tensor) -> f64 {
    let n = m.dim(0);
    let d = m.data();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((d[i * n + j] - d[j * n + i]).abs());
        }
    }
    worst
}

pub fn symm_eig(m: &Tensor) -> Result<SymmEig> {
    let n = as_square(m)?;
    let scale = m.max_abs().max(1.0);
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    if !m.is_finite() {
        return Err(Error::NoConvergence { routine: "symm_eig" });
    }
    let d = m.data();
    let fm = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (d[i * n + j] + d[j * n + i]));
    let eig = fm
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence { routine: "symm_eig" })?;
    let s = eig.S().column_vector();
    let u = eig.U();

    // faer returns ascending order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&k| s[k]).collect();
    let mut vectors = Tensor::zeros(&[n, n]);
    let vd = vectors.data_mut();
    for (col, &k) in order.iter().enumerate() {
        let sign = gauge_sign((0..n).map(|i| u[(i, k)]));
        for i in 0..n {
            vd[i * n + col] = sign * u[(i, k)];
        }
    }
    Ok(SymmEig { values, vectors })
}

pub fn svd(m: &Tensor) -> Result<Svd> {
    if m.rank() != 2 {
        return Err(Error::dim(format_args!("svd of rank-{} tensor", m.rank())));
    }
    if !m.is_finite() {
        return Err(Error::NoConvergence { routine: "svd" });
    }
    let (rows, cols) = (m.dim(0), m.dim(1));
    let d = m.data();
    let fm = Mat::<f64>::from_fn(rows, cols, |i, j| d[i * cols + j]);
    let dec = fm.thin_svd().map_err(|_| Error::NoConvergence { routine: "svd" })?;
    let r = rows.min(cols);
    let s = dec.S().column_vector();
    let (fu, fv) = (dec.U(), dec.V());

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let mut u = Tensor::zeros(&[rows, r]);
    let mut v = Tensor::zeros(&[cols, r]);
    let mut sv = Vec::with_capacity(r);
    for (col, &k) in order.iter().enumerate() {
        let sign = gauge_sign((0..rows).map(|i| fu[(i, k)]));
        for i in 0..rows {
            u.data_mut()[i * r + col] = sign * fu[(i, k)];
        }
        for j in 0..cols {
            v.data_mut()[j * r + col] = sign * fv[(j, k)];
        }
        sv.push(s[k].max(0.0));
    }
    Ok(Svd { u, s: sv, v })
}

fn gauge_sign(entries: impl Iterator<Item = f64>) -> f64 {
    let mut best = 0.0f64;
    let mut best_val = 0.0f64;
    for x in entries {
        if x.abs() > best * (1.0 + 1e-12) {
            best = x.abs();
            best_val = x;
        }
    }
    if best_val < 0.0 {
        -1.0
    } else {
        1.0
    }
}
