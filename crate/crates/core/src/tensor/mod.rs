//! Dense real tensors.
//!
//! Storage is row-major: the last axis varies fastest. For dims `[d0, d1, .., dn]`
//! the value at `[i0, i1, .., in]` lives at offset `((i0 * d1 + i1) * d2 + ..) * dn + in`.
//! Fusing a group of axes follows the same rule, so the first axis of a group is
//! the most significant digit of the fused index.

mod linalg;
pub(crate) mod record;

pub(crate) use linalg::asymmetry as linalg_asymmetry;
pub use linalg::{svd, symm_eig, Svd, SymmEig};
pub use record::{read_record, write_record};

use crate::error::{Error, Result};
use faer::{Accum, MatMut, MatRef, Par};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        Tensor {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::dim(format_args!(
                "dims {:?} need {} values, got {}",
                dims,
                len,
                data.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::dim(format_args!("zero extent in dims {dims:?}")));
        }
        Ok(Tensor {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Tensor::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            increment(&mut idx, dims);
        }
        t
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            dims: vec![1],
            data: vec![value],
        }
    }

    /// `n x n` identity.
    pub fn eye(n: usize) -> Self {
        Tensor::from_fn(&[n, n], |i| if i[0] == i[1] { 1.0 } else { 0.0 })
    }

    /// Row-major matrix from nested rows.
    pub fn matrix(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::dim(format_args!("ragged matrix rows")));
        }
        Tensor::from_vec(&[n, m], rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, axis: usize) -> usize {
        self.dims[axis]
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| {
            debug_assert!(i < d);
            acc * d + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn reshape(mut self, dims: &[usize]) -> Result<Self> {
        let len: usize = dims.iter().product();
        if len != self.data.len() || dims.iter().any(|&d| d == 0) {
            return Err(Error::dim(format_args!(
                "cannot reshape {:?} into {:?}",
                self.dims, dims
            )));
        }
        self.dims = dims.to_vec();
        Ok(self)
    }

    /// Axis permutation: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.rank())?;
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let rank = self.rank();
        let in_strides = strides(&self.dims);
        let out_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let step: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut out = Vec::with_capacity(self.data.len());

        // Innermost output axis handled as a strided run.
        let inner = out_dims[rank - 1];
        let inner_step = step[rank - 1];
        let outer_dims = &out_dims[..rank - 1];
        let mut idx = vec![0usize; rank - 1];
        let mut base = 0usize;
        let outer_count: usize = outer_dims.iter().product();
        for _ in 0..outer_count {
            let mut o = base;
            for _ in 0..inner {
                out.push(self.data[o]);
                o += inner_step;
            }
            // odometer over the outer axes, tracking the input offset
            for ax in (0..rank - 1).rev() {
                idx[ax] += 1;
                base += step[ax];
                if idx[ax] < outer_dims[ax] {
                    break;
                }
                base -= step[ax] * outer_dims[ax];
                idx[ax] = 0;
            }
        }
        Ok(Tensor {
            dims: out_dims,
            data: out,
        })
    }

    /// Fuses each group of axes into a single axis. The groups must partition
    /// the axes; the result has one axis per group, in group order.
    pub fn fuse(&self, groups: &[Vec<usize>]) -> Result<Self> {
        let perm: Vec<usize> = groups.iter().flatten().copied().collect();
        if groups.iter().any(|g| g.is_empty()) {
            return Err(Error::InvalidArgument("empty fusion group".into()));
        }
        check_permutation(&perm, self.rank())
            .map_err(|_| Error::InvalidArgument(format!("{groups:?} is not a partition of {} axes", self.rank())))?;
        let dims: Vec<usize> = groups
            .iter()
            .map(|g| g.iter().map(|&a| self.dims[a]).product())
            .collect();
        self.permute(&perm)?.reshape(&dims)
    }

    /// Splits `axis` into the given extents (inverse of fusing adjacent axes).
    pub fn split(self, axis: usize, extents: &[usize]) -> Result<Self> {
        if axis >= self.rank() || extents.iter().product::<usize>() != self.dims[axis] {
            return Err(Error::dim(format_args!(
                "cannot split axis {axis} of {:?} into {extents:?}",
                self.dims
            )));
        }
        let mut dims = self.dims[..axis].to_vec();
        dims.extend_from_slice(extents);
        dims.extend_from_slice(&self.dims[axis + 1..]);
        self.reshape(&dims)
    }

    /// Keeps indices `range` of `axis`.
    pub fn slice_axis(&self, axis: usize, range: std::ops::Range<usize>) -> Result<Self> {
        if axis >= self.rank() || range.end > self.dims[axis] || range.is_empty() {
            return Err(Error::dim(format_args!(
                "bad slice {range:?} of axis {axis} in {:?}",
                self.dims
            )));
        }
        let pre: usize = self.dims[..axis].iter().product();
        let post: usize = self.dims[axis + 1..].iter().product();
        let d = self.dims[axis];
        let mut data = Vec::with_capacity(pre * range.len() * post);
        for p in 0..pre {
            let start = (p * d + range.start) * post;
            let end = (p * d + range.end) * post;
            data.extend_from_slice(&self.data[start..end]);
        }
        let mut dims = self.dims.clone();
        dims[axis] = range.len();
        Ok(Tensor { dims, data })
    }

    /// Zero-pads (or keeps) `axis` up to `extent`.
    pub fn pad_axis(&self, axis: usize, extent: usize) -> Result<Self> {
        let d = self.dims[axis];
        if extent < d {
            return Err(Error::dim(format_args!("cannot pad axis of {d} to {extent}")));
        }
        let pre: usize = self.dims[..axis].iter().product();
        let post: usize = self.dims[axis + 1..].iter().product();
        let mut data = vec![0.0; pre * extent * post];
        for p in 0..pre {
            let src = &self.data[p * d * post..(p + 1) * d * post];
            data[p * extent * post..p * extent * post + d * post].copy_from_slice(src);
        }
        let mut dims = self.dims.clone();
        dims[axis] = extent;
        Ok(Tensor { dims, data })
    }

    /// Multiplies `axis` by a matrix: `out[.., j, ..] = sum_i self[.., i, ..] * m[i, j]`.
    /// The axis keeps its position.
    pub fn apply_axis(&self, axis: usize, m: &Tensor) -> Result<Self> {
        if m.rank() != 2 || axis >= self.rank() || m.dims[0] != self.dims[axis] {
            return Err(Error::dim(format_args!(
                "axis {axis} of {:?} does not match matrix {:?}",
                self.dims, m.dims
            )));
        }
        let pre: usize = self.dims[..axis].iter().product();
        let post: usize = self.dims[axis + 1..].iter().product();
        let (din, dout) = (m.dims[0], m.dims[1]);
        let mut out = vec![0.0; pre * dout * post];
        let mt = MatRef::from_row_major_slice(&m.data, din, dout).transpose();
        for p in 0..pre {
            let src = MatRef::from_row_major_slice(&self.data[p * din * post..(p + 1) * din * post], din, post);
            let dst = MatMut::from_row_major_slice_mut(&mut out[p * dout * post..(p + 1) * dout * post], dout, post);
            faer::linalg::matmul::matmul(dst, Accum::Replace, mt, src, 1.0, Par::Seq);
        }
        let mut dims = self.dims.clone();
        dims[axis] = dout;
        Ok(Tensor { dims, data: out })
    }

    pub fn transpose(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(Error::dim(format_args!("transpose of rank-{} tensor", self.rank())));
        }
        self.permute(&[1, 0])
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale(s);
        self
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Tensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::dim(format_args!("{:?} vs {:?}", self.dims, other.dims)));
        }
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += s * b);
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &Tensor) -> Result<f64> {
        if self.data.len() != other.data.len() {
            return Err(Error::dim(format_args!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Largest absolute entrywise difference.
    pub fn max_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.dims, other.dims, "max_diff on mismatched tensors");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Contracts `a` and `b` over the listed axis pairs `(axis of a, axis of b)`.
///
/// The result carries the free axes of `a` followed by the free axes of `b`,
/// each in their original order.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
    let mut in_a = vec![false; a.rank()];
    let mut in_b = vec![false; b.rank()];
    for &(x, y) in pairs {
        if x >= a.rank() || y >= b.rank() || in_a[x] || in_b[y] {
            return Err(Error::InvalidArgument(format!(
                "bad contraction pairs {pairs:?} for ranks {} and {}",
                a.rank(),
                b.rank()
            )));
        }
        if a.dims[x] != b.dims[y] {
            return Err(Error::dim(format_args!(
                "axis {x} of a has extent {} but axis {y} of b has extent {}",
                a.dims[x], b.dims[y]
            )));
        }
        in_a[x] = true;
        in_b[y] = true;
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|&i| !in_a[i]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&i| !in_b[i]).collect();

    let perm_a: Vec<usize> = free_a.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();
    let m: usize = free_a.iter().map(|&i| a.dims[i]).product();
    let n: usize = free_b.iter().map(|&i| b.dims[i]).product();
    let k: usize = pairs.iter().map(|p| a.dims[p.0]).product();

    let pa;
    let da = if is_identity(&perm_a) {
        &a.data
    } else {
        pa = a.permute(&perm_a)?;
        &pa.data
    };
    let pb;
    let db = if is_identity(&perm_b) {
        &b.data
    } else {
        pb = b.permute(&perm_b)?;
        &pb.data
    };

    let mut out = vec![0.0; m * n];
    gemm(da, db, &mut out, m, k, n);

    let mut dims: Vec<usize> = free_a.iter().map(|&i| a.dims[i]).collect();
    dims.extend(free_b.iter().map(|&i| b.dims[i]));
    if dims.is_empty() {
        dims.push(1);
    }
    Ok(Tensor { dims, data: out })
}

/// Matrix product of two rank-2 tensors.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(Error::dim(format_args!("matmul of {:?} and {:?}", a.dims, b.dims)));
    }
    contract(a, b, &[(1, 0)])
}

/// `a^T b` for rank-2 tensors.
pub fn matmul_tn(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(Error::dim(format_args!("matmul of {:?} and {:?}", a.dims, b.dims)));
    }
    contract(a, b, &[(0, 0)])
}

fn gemm(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    let lhs = MatRef::from_row_major_slice(a, m, k);
    let rhs = MatRef::from_row_major_slice(b, k, n);
    let dst = MatMut::from_row_major_slice_mut(out, m, n);
    faer::linalg::matmul::matmul(dst, Accum::Replace, lhs, rhs, 1.0, Par::Seq);
}

fn is_identity(perm: &[usize]) -> bool {
    perm.iter().enumerate().all(|(k, &p)| k == p)
}

fn check_permutation(perm: &[usize], rank: usize) -> Result<()> {
    let mut seen = vec![false; rank];
    if perm.len() != rank {
        return Err(Error::InvalidArgument(format!(
            "{perm:?} is not a permutation of {rank} axes"
        )));
    }
    for &p in perm {
        if p >= rank || seen[p] {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation of {rank} axes"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    for ax in (0..dims.len()).rev() {
        idx[ax] += 1;
        if idx[ax] < dims[ax] {
            return;
        }
        idx[ax] = 0;
    }
}
