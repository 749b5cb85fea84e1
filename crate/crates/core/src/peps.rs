//! Site tensors of the purified PEPS and their double-layer contractions.
//!
//! A site tensor has axes `[i, a, u, r, d, l]`: spin, ancilla and the four bond
//! legs (up, right, down, left). Double-layer tensors fuse each bra leg with
//! the matching ket leg as `bra * ket_dim + ket` and have axes `[u, r, d, l]`.

use crate::error::{Error, Result};
use crate::ising::TrotterTensor;
use crate::tensor::{contract, Tensor};

/// Local Hilbert space dimension of a spin (and of its ancilla).
pub const SPIN_DIM: usize = 2;

/// Bond legs in axis order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Right,
    Down,
    Left,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Right, Direction::Down, Direction::Left];

    /// Position among the four bond legs.
    pub fn index(self) -> usize {
        match self {
            Direction::Up => 0,
            Direction::Right => 1,
            Direction::Down => 2,
            Direction::Left => 3,
        }
    }

    pub fn opposite(self) -> Direction {
        Direction::ALL[(self.index() + 2) % 4]
    }
}

/// The eight leg permutations of the square's symmetry group; entry `k` says
/// which old leg becomes leg `k`.
pub const DIHEDRAL: [[usize; 4]; 8] = [
    [0, 1, 2, 3],
    [1, 2, 3, 0],
    [2, 3, 0, 1],
    [3, 0, 1, 2],
    [0, 3, 2, 1],
    [2, 1, 0, 3],
    [1, 0, 3, 2],
    [3, 2, 1, 0],
];

/// Averages `t` over the dihedral group acting on the four axes starting at
/// `first`.
pub fn dihedral_average(t: &Tensor, first: usize) -> Result<Tensor> {
    let rank = t.rank();
    if first + 4 != rank {
        return Err(Error::dim(format_args!(
            "bond legs must be the last four axes of {:?}",
            t.dims()
        )));
    }
    let mut acc = Tensor::zeros(t.dims());
    for g in DIHEDRAL {
        let perm: Vec<usize> = (0..first).chain(g.iter().map(|&k| first + k)).collect();
        let p = t.permute(&perm)?;
        acc.axpy(0.125, &p)?;
    }
    Ok(acc)
}

/// Largest entrywise deviation of `t` from its dihedral average.
pub fn symmetry_residual(t: &Tensor, first: usize) -> Result<f64> {
    Ok(t.max_diff(&dihedral_average(t, first)?))
}

/// Site tensor `A^{ia}_{urdl}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PepsTensor(Tensor);

impl PepsTensor {
    pub fn new(t: Tensor) -> Result<Self> {
        if t.rank() != 6 || t.dim(0) != SPIN_DIM || t.dim(1) != SPIN_DIM {
            return Err(Error::dim(format_args!(
                "site tensor must be [2, 2, u, r, d, l], got {:?}",
                t.dims()
            )));
        }
        if !t.is_finite() {
            return Err(Error::InvalidArgument("site tensor has non-finite entries".into()));
        }
        Ok(PepsTensor(t))
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn leg_dim(&self, dir: Direction) -> usize {
        self.0.dim(2 + dir.index())
    }

    /// Bond dimension of an isotropic tensor.
    pub fn bond_dim(&self) -> usize {
        self.0.dim(2)
    }

    pub fn is_isotropic_shape(&self) -> bool {
        self.0.dims()[2..].iter().all(|&d| d == self.0.dim(2))
    }

    pub fn symmetrized(&self) -> Result<Self> {
        Ok(PepsTensor(dihedral_average(&self.0, 2)?))
    }

    pub fn symmetry_residual(&self) -> Result<f64> {
        symmetry_residual(&self.0, 2)
    }

    pub fn scaled(&self, s: f64) -> Self {
        PepsTensor(self.0.clone().scaled(s))
    }
}

/// Gate-enlarged site tensor `B`, bond extent `k` times that of its source.
#[derive(Clone, Debug, PartialEq)]
pub struct EnlargedTensor(Tensor);

impl EnlargedTensor {
    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn leg_dim(&self, dir: Direction) -> usize {
        self.0.dim(2 + dir.index())
    }

    pub fn bond_dim(&self) -> usize {
        self.0.dim(2)
    }

    /// Reinterprets an untruncated `B` as the next site tensor.
    pub fn into_peps(self) -> Result<PepsTensor> {
        PepsTensor::new(self.0)
    }
}

/// Double-layer transfer tensor `a` with four fused legs of extent `D^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferTensor(Tensor);

impl TransferTensor {
    pub fn new(t: Tensor) -> Result<Self> {
        if t.rank() != 4 {
            return Err(Error::dim(format_args!(
                "transfer tensor must have rank 4, got {:?}",
                t.dims()
            )));
        }
        Ok(TransferTensor(t))
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    /// Fused leg extent `D^2` of an isotropic transfer tensor.
    pub fn leg_dim(&self) -> usize {
        self.0.dim(0)
    }

    pub fn symmetry_residual(&self) -> Result<f64> {
        symmetry_residual(&self.0, 0)
    }
}

/// `A^{ia}_{urdl} = delta^{ia} delta_{u0} delta_{r0} delta_{d0} delta_{l0}`, `D = 1`.
pub fn initial_tensor() -> PepsTensor {
    let t = Tensor::from_fn(&[SPIN_DIM, SPIN_DIM, 1, 1, 1, 1], |ix| {
        if ix[0] == ix[1] {
            1.0
        } else {
            0.0
        }
    });
    PepsTensor(t)
}

/// Applies a single-site operator to the spin index: `A^{ia} <- sum_j op_ij A^{ja}`.
pub fn apply_spin_operator(a: &PepsTensor, op: &Tensor) -> Result<PepsTensor> {
    // apply_axis multiplies by m[old, new], so pass op^T
    PepsTensor::new(a.0.apply_axis(0, &op.transpose()?)?)
}

/// `B^{ia}_{2u+s_u, ..} = sum_j T^{ij}_{s_u ..} A^{ja}_{u ..}` on every leg.
pub fn absorb_trotter(a: &PepsTensor, gate: &TrotterTensor) -> Result<EnlargedTensor> {
    absorb_trotter_masked(a, gate, [true; 4])
}

/// As [`absorb_trotter`], but legs with `active[k] == false` (lattice
/// boundary) only keep the gate index `s = 0` and so keep their extent.
pub fn absorb_trotter_masked(a: &PepsTensor, gate: &TrotterTensor, active: [bool; 4]) -> Result<EnlargedTensor> {
    let t = gate.tensor();
    let k = gate.bond_factor();
    // [i, su, sr, sd, sl, a, u, r, d, l]
    let tb = contract(t, &a.0, &[(1, 0)])?;
    let tb = tb.permute(&[0, 5, 6, 1, 7, 2, 8, 3, 9, 4])?;
    let dims = a.0.dims();
    let fused = tb.reshape(&[dims[0], dims[1], dims[2] * k, dims[3] * k, dims[4] * k, dims[5] * k])?;
    let mut out = fused;
    for (leg, &on) in active.iter().enumerate() {
        if !on {
            if dims[2 + leg] != 1 {
                return Err(Error::dim(format_args!("inactive leg {leg} must have extent 1")));
            }
            out = out.slice_axis(2 + leg, 0..1)?;
            // the site prefactor carries half a bond's cosh(dbeta/2) per leg
            out.scale((0.5 * gate.dbeta()).cosh().powf(-0.5));
        }
    }
    Ok(EnlargedTensor(out))
}

/// Contracts `bra` and `ket` site tensors over spin and ancilla, with an
/// optional spin operator between them, and fuses matching legs.
pub fn double_layer(bra: &Tensor, ket: &Tensor, op: Option<&Tensor>) -> Result<Tensor> {
    if bra.rank() != 6 || ket.rank() != 6 {
        return Err(Error::dim(format_args!(
            "double layer of {:?} and {:?}",
            bra.dims(),
            ket.dims()
        )));
    }
    let ket_op;
    let ket = match op {
        Some(op) => {
            ket_op = ket.apply_axis(0, &op.transpose()?)?;
            &ket_op
        }
        None => ket,
    };
    let s2 = bra.dim(0) * bra.dim(1);
    let bl: Vec<usize> = bra.dims()[2..].to_vec();
    let kl: Vec<usize> = ket.dims()[2..].to_vec();
    let bm = bra.clone().reshape(&[s2, bl.iter().product()])?;
    let km = ket.clone().reshape(&[s2, kl.iter().product()])?;
    let g = contract(&bm, &km, &[(0, 0)])?;
    let g = g.reshape(&[bl[0], bl[1], bl[2], bl[3], kl[0], kl[1], kl[2], kl[3]])?;
    let g = g.permute(&[0, 4, 1, 5, 2, 6, 3, 7])?;
    g.reshape(&[bl[0] * kl[0], bl[1] * kl[1], bl[2] * kl[2], bl[3] * kl[3]])
}

/// Transfer tensor `a` of an isotropic site tensor.
pub fn transfer_tensor_a(a: &PepsTensor) -> Result<TransferTensor> {
    TransferTensor::new(double_layer(&a.0, &a.0, None)?)
}

/// Transfer tensor with a spin operator inserted (impurity tensor).
pub fn transfer_tensor_op(a: &PepsTensor, op: &Tensor) -> Result<TransferTensor> {
    TransferTensor::new(double_layer(&a.0, &a.0, Some(op))?)
}

/// Renormalizes selected legs of a site tensor: leg `k` is multiplied by
/// `maps[k]` (`old x new`) when present.
pub fn renormalize_legs(t: &Tensor, maps: [Option<&Tensor>; 4]) -> Result<Tensor> {
    let mut out = t.clone();
    for (leg, m) in maps.iter().enumerate() {
        if let Some(m) = m {
            out = out.apply_axis(2 + leg, m)?;
        }
    }
    Ok(out)
}

/// Transfer tensor `b` of a site next to the optimized bond: the bra is `B`
/// with all legs but `open` renormalized by `w` (`kD x D`), the ket is
/// `a_prime`. The open leg has extent `kD * D`, the others `D^2`.
pub fn transfer_tensor_b(a_prime: &PepsTensor, b: &EnlargedTensor, w: &Tensor, open: Direction) -> Result<Tensor> {
    if w.rank() != 2 || w.dim(0) != b.bond_dim() || w.dim(1) != a_prime.bond_dim() {
        return Err(Error::dim(format_args!(
            "isometry {:?} does not map B bond {} to A' bond {}",
            w.dims(),
            b.bond_dim(),
            a_prime.bond_dim()
        )));
    }
    let mut maps = [Some(w); 4];
    maps[open.index()] = None;
    let bra = renormalize_legs(&b.0, maps)?;
    double_layer(&bra, &a_prime.0, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{pauli_z, TrotterTensor};

    #[test]
    fn initial_tensor_entries() {
        let a = initial_tensor();
        assert_eq!(a.tensor().dims(), &[2, 2, 1, 1, 1, 1]);
        assert_eq!(a.tensor().data(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn initial_reduced_density_matrix_is_maximally_mixed() {
        // rho_ij = sum_a A^{ia} A^{ja}
        let a = initial_tensor();
        let m = a.tensor().clone().reshape(&[2, 2]).unwrap();
        let rho = contract(&m, &m, &[(1, 1)]).unwrap();
        assert_eq!(rho, Tensor::eye(2));
    }

    #[test]
    fn transfer_of_initial_is_two() {
        let a = transfer_tensor_a(&initial_tensor()).unwrap();
        assert_eq!(a.tensor().dims(), &[1, 1, 1, 1]);
        assert_eq!(a.tensor().data(), &[2.0]);
        let z = transfer_tensor_op(&initial_tensor(), &pauli_z()).unwrap();
        assert_eq!(z.tensor().data(), &[0.0]);
    }

    #[test]
    fn absorb_doubles_bond() {
        let t = TrotterTensor::new(0.1).unwrap();
        let b = absorb_trotter(&initial_tensor(), &t).unwrap();
        assert_eq!(b.tensor().dims(), &[2, 2, 2, 2, 2, 2]);
        let b2 = absorb_trotter(&b.clone().into_peps().unwrap(), &t).unwrap();
        assert_eq!(b2.bond_dim(), 4);
    }

    #[test]
    fn absorb_index_layout() {
        // B^{ia}_{2u+s..} = sum_j T^{ij}_{s..} A^{ja}_{u..}
        let t = TrotterTensor::new(0.3).unwrap();
        let a = PepsTensor::new(Tensor::from_fn(&[2, 2, 2, 2, 2, 2], |ix| {
            ix.iter()
                .enumerate()
                .map(|(k, &v)| (k + 1) as f64 * v as f64)
                .sum::<f64>()
                .sin()
        }))
        .unwrap();
        let b = absorb_trotter(&a, &t).unwrap();
        let (u, r, d, l) = (1, 0, 1, 1);
        let (su, sr, sd, sl) = (0, 1, 1, 0);
        for i in 0..2 {
            for anc in 0..2 {
                let expect: f64 = (0..2)
                    .map(|j| t.tensor().get(&[i, j, su, sr, sd, sl]) * a.tensor().get(&[j, anc, u, r, d, l]))
                    .sum();
                let got = b
                    .tensor()
                    .get(&[i, anc, 2 * u + su, 2 * r + sr, 2 * d + sd, 2 * l + sl]);
                assert!((got - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn vanishing_step_keeps_zero_block() {
        let a = initial_tensor();
        let b = absorb_trotter(&a, &TrotterTensor::new(1e-14).unwrap()).unwrap();
        let block = (0..4).fold(b.tensor().clone(), |acc, leg| acc.slice_axis(2 + leg, 0..1).unwrap());
        assert!(block.max_diff(a.tensor()) < 1e-13);
        assert!(b.tensor().get(&[0, 0, 1, 1, 0, 0]).abs() < 1e-13);
    }

    #[test]
    fn masked_legs_keep_extent() {
        let t = TrotterTensor::new(0.1).unwrap();
        let b = absorb_trotter_masked(&initial_tensor(), &t, [false, true, true, false]).unwrap();
        assert_eq!(b.tensor().dims(), &[2, 2, 1, 2, 2, 1]);
    }

    #[test]
    fn transfer_tensor_is_isotropic_and_psd() {
        let t = TrotterTensor::new(0.4).unwrap();
        let b = absorb_trotter(&initial_tensor(), &t).unwrap().into_peps().unwrap();
        let a = transfer_tensor_a(&b).unwrap();
        assert!(a.symmetry_residual().unwrap() < 1e-13);
        // across the (u, r | d, l) cut it is a Gram matrix
        let q = a.leg_dim();
        let m = a.tensor().clone().reshape(&[q * q, q * q]).unwrap();
        let e = crate::tensor::symm_eig(&m).unwrap();
        assert!(*e.values.last().unwrap() > -1e-10);
    }

    #[test]
    fn dihedral_group_is_closed() {
        for g in DIHEDRAL {
            for h in DIHEDRAL {
                let comp: Vec<usize> = (0..4).map(|k| g[h[k]]).collect();
                assert!(DIHEDRAL.iter().any(|x| x.as_slice() == comp.as_slice()));
            }
        }
    }
}
