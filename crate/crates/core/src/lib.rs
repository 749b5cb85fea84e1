//! Thermal states of the 2D transverse-field Ising model from imaginary-time
//! evolution of a purified PEPS, with corner-matrix environments on the
//! infinite lattice and boundary-MPS contraction on finite open lattices.

pub mod checkpoint;
pub mod ctmrg;
pub mod error;
pub mod evolution;
pub mod finite;
pub mod ising;
pub mod observables;
pub mod oracle;
pub mod peps;
pub mod renorm;
pub mod tensor;

pub use error::{Error, Result};

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use ctmrg::{converge_env, CtmConfig, Environment};
pub use evolution::{evolve, EvolutionConfig, Schedule, TrajectoryRecord};
pub use ising::{field_halfstep_matrix, pauli_x, pauli_z, ModelParams, TrotterTensor, BETA0, H0};
pub use peps::{Direction, EnlargedTensor, PepsTensor, TransferTensor};
pub use renorm::{
    optimize_isometry, optimize_significant, renormalize, self_consistent_update, BondEnvironment, Isometry,
    SelfConsistentConfig,
};
pub use tensor::{contract, svd, symm_eig, Tensor};
