//! Variational ground and first-excited states for N_a three-level atoms in a
//! single-mode cavity: coherent-state energy surfaces, symmetry-adapted
//! coherent states (SACS), closed forms for the V configuration, and an
//! exact-diagonalization oracle.

pub mod boundary;
pub mod error;
pub mod fit;
pub mod fock;
pub mod minimize;
pub mod model;
pub mod sacs;
pub mod surface;
pub mod validation;
pub mod vconfig;

pub use error::{Error, Result};
pub use model::{
    regime_v, rwa_coupling_map, tilde_gamma, AtomicConfiguration, CoherentPoint, Couplings, ModelParams, ParityBranch,
    PolarPoint, Regime,
};
