//! Suzuki-Trotter ingredients for the transverse-field Ising model
//! `H = -sum_<mm'> Z_m Z_m' - h sum_m X_m - delta sum_m Z_m` (coupling J = 1).

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Onsager critical inverse temperature of the classical 2D Ising model,
/// `-ln(sqrt(2) - 1) / 2`.
pub const BETA0: f64 = 0.440_686_793_509_771_5;

/// Zero-temperature critical transverse field.
pub const H0: f64 = 3.044;

/// Number of values each gate bond index takes (the `Z x Z` interaction splits
/// into two terms).
pub const GATE_BOND_DIM: usize = 2;

pub fn pauli_x() -> Tensor {
    Tensor::matrix(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
}

pub fn pauli_z() -> Tensor {
    Tensor::matrix(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
}

/// Projector onto spin up (`Z = +1`).
pub fn projector_up() -> Tensor {
    Tensor::matrix(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Transverse field.
    pub h: f64,
    /// Longitudinal bias.
    pub delta: f64,
    /// Imaginary-time step.
    pub dbeta: f64,
}

impl ModelParams {
    pub fn new(h: f64, delta: f64, dbeta: f64) -> Result<Self> {
        let p = ModelParams { h, delta, dbeta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dbeta > 0.0 && self.dbeta.is_finite()) {
            return Err(Error::InvalidArgument(format!("dbeta must be > 0, got {}", self.dbeta)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidArgument(format!("h must be >= 0, got {}", self.h)));
        }
        Ok(())
    }
}

/// Elementary tensor of the interaction gate.
///
/// Axes: `[i, j, s_u, s_r, s_d, s_l]` with spin-out `i`, spin-in `j`, and four
/// gate bond indices of extent [`GATE_BOND_DIM`]. Entries are
/// `cosh^2(dbeta/2) (O^s)^{ij}` with `O = Z tanh^{1/2}(dbeta/2)` and `s` the sum
/// of the bond indices.
#[derive(Clone, Debug)]
pub struct TrotterTensor {
    tensor: Tensor,
    dbeta: f64,
}

impl TrotterTensor {
    pub fn new(dbeta: f64) -> Result<Self> {
        if !(dbeta > 0.0 && dbeta.is_finite()) {
            return Err(Error::InvalidArgument(format!("dbeta must be > 0, got {dbeta}")));
        }
        let c2 = (0.5 * dbeta).cosh().powi(2);
        let root_t = (0.5 * dbeta).tanh().sqrt();
        let k = GATE_BOND_DIM;
        let tensor = Tensor::from_fn(&[2, 2, k, k, k, k], |idx| {
            let (i, j) = (idx[0], idx[1]);
            if i != j {
                return 0.0;
            }
            let s: usize = idx[2..].iter().sum();
            let z = if i == 0 { 1.0 } else { -1.0 };
            c2 * (z * root_t).powi(s as i32)
        });
        Ok(TrotterTensor { tensor, dbeta })
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn dbeta(&self) -> f64 {
        self.dbeta
    }

    /// Gate expansion factor `k` of the bond dimension.
    pub fn bond_factor(&self) -> usize {
        self.tensor.dim(2)
    }
}

/// Exact single-site half step `exp((dbeta/4) (h X + delta Z))`.
pub fn field_halfstep_matrix(params: &ModelParams) -> Tensor {
    let theta = 0.25 * params.dbeta;
    let r = (params.h * params.h + params.delta * params.delta).sqrt();
    if r == 0.0 {
        return Tensor::eye(2);
    }
    let c = (theta * r).cosh();
    // sinh(x)/r computed without cancellation for tiny fields
    let s = (theta * r).sinh() / r;
    Tensor::matrix(&[
        &[c + s * params.delta, s * params.h],
        &[s * params.h, c - s * params.delta],
    ])
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{dense_expm, kron};
    use crate::tensor::{contract, symm_eig};

    #[test]
    fn beta0_matches_closed_form() {
        let closed = -(std::f64::consts::SQRT_2 - 1.0).ln() / 2.0;
        assert!((BETA0 - closed).abs() < 1e-15);
        assert!((BETA0 - 0.441).abs() < 5e-4);
    }

    #[test]
    fn vanishing_step_is_identity_block() {
        let t = TrotterTensor::new(1e-14).unwrap();
        let tt = t.tensor();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((tt.get(&[i, j, 0, 0, 0, 0]) - expect).abs() < 1e-12);
            }
        }
        assert!(tt.get(&[0, 0, 1, 0, 0, 0]).abs() < 1e-6);
        assert!(tt.get(&[0, 0, 1, 1, 0, 0]).abs() < 1e-12);
    }

    #[test]
    fn single_bond_block_values() {
        // cosh^2(0.1) = 1.0100333778..., tanh(0.1)^{1/2} = 0.3157023830...
        let t = TrotterTensor::new(0.2).unwrap();
        let c2 = 0.1f64.cosh().powi(2);
        let rt = 0.1f64.tanh().sqrt();
        assert!((c2 - 1.010_033_377_8).abs() < 1e-10);
        assert!((rt - 0.315_702_383_0).abs() < 1e-10);
        assert!((t.tensor().get(&[0, 0, 0, 1, 0, 0]) - c2 * rt).abs() < 1e-15);
        assert!((t.tensor().get(&[1, 1, 0, 0, 0, 1]) + c2 * rt).abs() < 1e-15);
    }

    #[test]
    fn bond_permutation_symmetry_is_exact() {
        let t = TrotterTensor::new(0.37).unwrap();
        for perm in [[0, 1, 3, 4, 5, 2], [0, 1, 2, 5, 4, 3], [0, 1, 4, 3, 2, 5]] {
            assert_eq!(&t.tensor().permute(&perm).unwrap(), t.tensor());
        }
    }

    /// Two Trotter tensors joined on one gate bond (all other gate bonds at 0),
    /// divided by the leftover `cosh^3`, give `exp((dbeta/2) Z x Z)`.
    pub(crate) fn two_site_gate(dbeta: f64) -> Tensor {
        let t = TrotterTensor::new(dbeta).unwrap();
        let k = t.bond_factor();
        // keep s_r on the left site and s_l on the right site
        let left = t
            .tensor()
            .slice_axis(2, 0..1)
            .unwrap()
            .slice_axis(4, 0..1)
            .unwrap()
            .slice_axis(5, 0..1)
            .unwrap();
        let right = t
            .tensor()
            .slice_axis(2, 0..1)
            .unwrap()
            .slice_axis(3, 0..1)
            .unwrap()
            .slice_axis(4, 0..1)
            .unwrap();
        let left = left.reshape(&[2, 2, k]).unwrap();
        let right = right.reshape(&[2, 2, k]).unwrap();
        let g = contract(&left, &right, &[(2, 2)]).unwrap(); // [i, j, i', j']
        let g = g.permute(&[0, 2, 1, 3]).unwrap().reshape(&[4, 4]).unwrap();
        g.scaled((0.5 * dbeta).cosh().powi(-3))
    }

    #[test]
    fn two_tensor_contraction_is_exact_gate() {
        for dbeta in [0.01, 0.2, 0.5, 1.0] {
            let g = two_site_gate(dbeta);
            let zz = kron(&pauli_z(), &pauli_z());
            let exact = dense_expm(&zz.scaled(0.5 * dbeta));
            assert!(g.max_diff(&exact) < 1e-12, "dbeta={dbeta}");
        }
    }

    #[test]
    fn field_step_limits() {
        let id = field_halfstep_matrix(&ModelParams::new(0.0, 0.0, 0.3).unwrap());
        assert_eq!(id, Tensor::eye(2));

        let m = field_halfstep_matrix(&ModelParams::new(1.0, 0.0, 0.4).unwrap());
        let (c, s) = (0.1f64.cosh(), 0.1f64.sinh());
        let expect = Tensor::matrix(&[&[c, s], &[s, c]]).unwrap();
        assert!(m.max_diff(&expect) < 1e-15);
    }

    #[test]
    fn field_step_matches_series_oracle() {
        let p = ModelParams::new(2.0, 1e-6, 0.01).unwrap();
        let gen = {
            let mut g = pauli_x().scaled(p.h);
            g.axpy(p.delta, &pauli_z()).unwrap();
            g.scaled(0.25 * p.dbeta)
        };
        assert!(field_halfstep_matrix(&p).max_diff(&dense_expm(&gen)) < 1e-14);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(1.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 0.1).is_err());
        assert!(ModelParams::new(-1.0, 0.0, 0.1).is_err());
        assert!(TrotterTensor::new(-0.1).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gate_reconstruction_over_unit_interval(dbeta in 1e-4f64..=1.0) {
                let exact = dense_expm(&kron(&pauli_z(), &pauli_z()).scaled(0.5 * dbeta));
                prop_assert!(two_site_gate(dbeta).max_diff(&exact) < 1e-12);
            }

            #[test]
            fn field_step_is_spd(h in 0.0f64..5.0, delta in 0.0f64..1.0, dbeta in 1e-4f64..1.0) {
                let m = field_halfstep_matrix(&ModelParams::new(h, delta, dbeta).unwrap());
                let e = symm_eig(&m).unwrap();
                prop_assert!(e.values[1] > 0.0);
            }
        }
    }
}
