//! Quantum versus classical orbital-pair correlations in sparse
//! configuration-interaction wavefunctions.
//!
//! The library is generic over the scalar type (see [`scalar::Real`]); the
//! aliases at the crate root fix it to `f64` (or `f32` where suffixed).

pub mod error;
pub mod fci;
pub mod info;
pub mod orbitals;
pub mod scalar;
pub mod trace;
pub mod wfncore;

pub use nalgebra;

pub use error::{Error, Result};
pub use scalar::Real;
pub use wfncore::{Determinant, Ladder, MAX_QUBITS};

pub type Wavefunction = wfncore::SparseWavefunction<f64>;
pub type Wavefunction32 = wfncore::SparseWavefunction<f32>;
pub type PairDensity = trace::PairDensityMatrix<f64>;
pub type SingleDensity = trace::SingleDensityMatrix<f64>;
pub type OneBodyRdm = trace::OneBodyRDM<f64>;
pub type MiMatrix = info::MutualInformationMatrix<f64>;
pub type Report = info::CorrelationReport<f64>;
pub type Report32 = info::CorrelationReport<f32>;
pub type MolecularHamiltonian = fci::Hamiltonian<f64>;
pub type GroundState = fci::GroundState<f64>;
pub type Rotation = orbitals::OrbitalRotation<f64>;
pub type InoResult = orbitals::InoResult<f64>;
