//! Boundary-MPS contraction of finite double-layer networks.

use crate::error::{Error, Result};
use crate::tensor::{contract, svd, Tensor};

/// Rectangular network of rank-4 tensors `[u, r, d, l]`, row-major; legs on
/// the outer boundary have extent 1.
#[derive(Clone, Debug)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Tensor>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, cells: Vec<Tensor>) -> Result<Self> {
        if cells.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::dim(format_args!(
                "{} cells for a {rows}x{cols} grid",
                cells.len()
            )));
        }
        if let Some(c) = cells.iter().find(|c| c.rank() != 4) {
            return Err(Error::dim(format_args!("grid cell of shape {:?}", c.dims())));
        }
        Ok(Grid { rows, cols, cells })
    }

    pub fn cell(&self, r: usize, c: usize) -> &Tensor {
        &self.cells[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, t: Tensor) {
        self.cells[r * self.cols + c] = t;
    }

    fn remap(
        &self,
        rows: usize,
        cols: usize,
        src: impl Fn(usize, usize) -> (usize, usize),
        perm: [usize; 4],
    ) -> Result<Self> {
        let mut cells = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let (sr, sc) = src(r, c);
                cells.push(self.cell(sr, sc).permute(&perm)?);
            }
        }
        Grid::new(rows, cols, cells)
    }

    /// Upside down: row order reversed, `u` and `d` swapped.
    pub fn flip_vertical(&self) -> Result<Self> {
        let n = self.rows;
        self.remap(n, self.cols, |r, c| (n - 1 - r, c), [2, 1, 0, 3])
    }

    /// Mirror image: column order reversed, `l` and `r` swapped.
    pub fn flip_horizontal(&self) -> Result<Self> {
        let n = self.cols;
        self.remap(self.rows, n, |r, c| (r, n - 1 - c), [0, 3, 2, 1])
    }

    /// Reflection in the main diagonal: `(r, c) -> (c, r)`, `u <-> l`, `r <-> d`.
    pub fn transpose(&self) -> Result<Self> {
        self.remap(self.cols, self.rows, |r, c| (c, r), [3, 2, 1, 0])
    }
}

/// Chain of `[l, p, r]` tensors; the true value is `exp(log_scale)` times
/// the stored one.
#[derive(Clone, Debug)]
pub struct BoundaryMps {
    tensors: Vec<Tensor>,
    log_scale: f64,
    /// Discarded weight of each truncating absorption.
    truncation: Vec<f64>,
}

impl BoundaryMps {
    /// The open boundary above the first row.
    pub fn trivial(cols: usize) -> Self {
        BoundaryMps {
            tensors: vec![Tensor::from_vec(&[1, 1, 1], vec![1.0]).unwrap(); cols],
            log_scale: 0.0,
            truncation: Vec::new(),
        }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn truncation_errors(&self) -> &[f64] {
        &self.truncation
    }

    pub fn max_bond(&self) -> usize {
        self.tensors.iter().map(|t| t.dim(2)).max().unwrap_or(1)
    }

    /// Absorbs a row of `[u, r, d, l]` tensors from below and compresses back
    /// to bond dimension `m_mps`.
    pub fn absorb_row(&mut self, row: &[Tensor], m_mps: usize) -> Result<()> {
        if row.len() != self.tensors.len() {
            return Err(Error::dim(format_args!(
                "row of {} for an MPS of {}",
                row.len(),
                self.tensors.len()
            )));
        }
        for (j, x) in row.iter().enumerate() {
            let t = contract(&self.tensors[j], x, &[(1, 0)])?; // [l, r, R, d, L]
            let (l, r, rr, d, ll) = (t.dim(0), t.dim(1), t.dim(2), t.dim(3), t.dim(4));
            self.tensors[j] = t.permute(&[0, 4, 3, 1, 2])?.reshape(&[l * ll, d, r * rr])?;
        }
        for w in self.tensors.windows(2) {
            if w[0].dim(2) != w[1].dim(0) {
                return Err(Error::dim(format_args!(
                    "row legs do not join: {} vs {}",
                    w[0].dim(2),
                    w[1].dim(0)
                )));
            }
        }
        self.compress(m_mps)
    }

    /// Right-canonicalizes, then truncates left to right; the result is
    /// left-canonical up to the last tensor, which carries the norm.
    fn compress(&mut self, m_mps: usize) -> Result<()> {
        let n = self.tensors.len();
        for j in (1..n).rev() {
            let t = &self.tensors[j];
            let (l, p, r) = (t.dim(0), t.dim(1), t.dim(2));
            let s = svd(&t.clone().reshape(&[l, p * r])?)?;
            let k = kept(&s.s, usize::MAX);
            let vt = s.v.slice_axis(1, 0..k)?.transpose()?;
            self.tensors[j] = vt.reshape(&[k, p, r])?;
            let us = Tensor::from_fn(&[l, k], |ix| s.u.get(&[ix[0], ix[1]]) * s.s[ix[1]]);
            self.tensors[j - 1] = self.tensors[j - 1].apply_axis(2, &us)?;
        }
        let mut discarded = 0.0;
        for j in 0..n - 1 {
            let t = &self.tensors[j];
            let (l, p, r) = (t.dim(0), t.dim(1), t.dim(2));
            let s = svd(&t.clone().reshape(&[l * p, r])?)?;
            let k = kept(&s.s, m_mps);
            let all: f64 = s.s.iter().map(|x| x * x).sum();
            discarded = f64::max(
                discarded,
                s.s[k..].iter().map(|x| x * x).sum::<f64>() / all.max(f64::MIN_POSITIVE),
            );
            self.tensors[j] = s.u.slice_axis(1, 0..k)?.reshape(&[l, p, k])?;
            let sv = Tensor::from_fn(&[k, r], |ix| s.s[ix[0]] * s.v.get(&[ix[1], ix[0]]));
            self.tensors[j + 1] = contract(&sv, &self.tensors[j + 1], &[(1, 0)])?;
        }
        let last = &mut self.tensors[n - 1];
        let norm = last.norm();
        if !norm.is_finite() {
            return Err(Error::NoConvergence {
                routine: "boundary MPS compression",
            });
        }
        // a vanishing network stays exactly zero
        if norm > 0.0 {
            last.scale(1.0 / norm);
            self.log_scale += norm.ln();
        }
        self.truncation.push(discarded);
        Ok(())
    }

    /// Full contraction once every physical leg has extent 1.
    pub fn close(&self) -> Result<(f64, f64)> {
        let mut v = Tensor::from_vec(&[1], vec![1.0])?;
        for t in &self.tensors {
            if t.dim(1) != 1 {
                return Err(Error::dim(format_args!("open physical leg of extent {}", t.dim(1))));
            }
            let m = t.clone().reshape(&[t.dim(0), t.dim(2)])?;
            v = contract(&v, &m, &[(0, 0)])?;
        }
        Ok((v.data()[0], self.log_scale))
    }
}

fn kept(s: &[f64], cap: usize) -> usize {
    let s0 = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().take_while(|&&x| x > 1e-15 * s0).count().max(1);
    rank.min(cap)
}

/// Boundary MPS after absorbing rows `0..rows` of `grid` from the top.
pub fn boundary_contract(grid: &Grid, rows: usize, m_mps: usize) -> Result<BoundaryMps> {
    let mut mps = BoundaryMps::trivial(grid.cols);
    for r in 0..rows {
        let row: Vec<Tensor> = (0..grid.cols).map(|c| grid.cell(r, c).clone()).collect();
        mps.absorb_row(&row, m_mps)?;
    }
    Ok(mps)
}

/// Value of the whole network as `(mantissa, log_scale)`: the middle row is
/// sandwiched between boundary MPSs grown from the top and bottom edges.
pub fn contract_grid(grid: &Grid, m_mps: usize) -> Result<(f64, f64)> {
    let r = grid.rows / 2;
    let upper = boundary_contract(grid, r, m_mps)?;
    let lower = boundary_contract(&grid.flip_vertical()?, grid.rows - 1 - r, m_mps)?;
    let mut log = upper.log_scale() + lower.log_scale();
    let mut env = unit3();
    for j in 0..grid.cols {
        env = sandwich_step(&env, &upper.tensors[j], grid.cell(r, j), &lower.tensors[j])?;
        let n = env.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Ok((0.0, log));
        }
        env.scale(1.0 / n);
        log += n.ln();
    }
    if env.len() != 1 {
        return Err(Error::dim(format_args!(
            "open legs of extent {:?} on the right edge",
            env.dims()
        )));
    }
    Ok((env.data()[0], log))
}

/// One column of a row sandwiched between an upper and a lower MPS:
/// `env[a, x, b]` to `[a', r, b']`.
fn sandwich_step(env: &Tensor, up: &Tensor, x: &Tensor, down: &Tensor) -> Result<Tensor> {
    let t = contract(env, up, &[(0, 0)])?; // [x, b, u, a']
    let t = contract(&t, x, &[(0, 3), (2, 0)])?; // [b, a', r, d]
    let t = contract(&t, down, &[(0, 0), (3, 1)])?; // [a', r, b']
    Ok(t)
}

fn unit3() -> Tensor {
    Tensor::from_vec(&[1, 1, 1], vec![1.0]).unwrap()
}

/// Row `r` of the grid sandwiched between the compressed networks above and
/// below it; returns the half-contractions at columns `c` (open right leg)
/// and `c + 1` (open left leg, mirrored to point right) as `[a, open, b]`,
/// together with their accumulated log scale.
pub fn bond_halves(grid: &Grid, r: usize, c: usize, m_mps: usize) -> Result<(Tensor, Tensor, f64)> {
    if r >= grid.rows || c + 1 >= grid.cols {
        return Err(Error::InvalidArgument(format!("no horizontal bond at ({r}, {c})")));
    }
    let upper = boundary_contract(grid, r, m_mps)?;
    let flipped = grid.flip_vertical()?;
    let lower = boundary_contract(&flipped, grid.rows - 1 - r, m_mps)?;
    let mut log = upper.log_scale() + lower.log_scale();

    let mut left = unit3();
    for j in 0..=c {
        left = sandwich_step(&left, &upper.tensors[j], grid.cell(r, j), &lower.tensors[j])?;
        if j < c {
            let n = left.norm();
            left.scale(1.0 / n);
            log += n.ln();
        }
    }
    let mut right = unit3();
    for j in (c + 1..grid.cols).rev() {
        let up = upper.tensors[j].permute(&[2, 1, 0])?;
        let down = lower.tensors[j].permute(&[2, 1, 0])?;
        let x = grid.cell(r, j).permute(&[0, 3, 2, 1])?;
        right = sandwich_step(&right, &up, &x, &down)?;
        if j > c + 1 {
            let n = right.norm();
            right.scale(1.0 / n);
            log += n.ln();
        }
    }
    Ok((left, right, log))
}
