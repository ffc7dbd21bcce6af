//! Simulation of atomic-ensemble qubits in a truncated Fock space: dual-rail
//! encoding, Raman rotations, a two-round Bell measurement with linear
//! optics and threshold detectors, a teleported C-NOT, and the two-qubit
//! Deutsch-Jozsa algorithm built on top of them.

pub mod bell;
pub mod dj;
pub mod error;
pub mod fock;
pub mod qubit;
pub mod teleport;

pub use error::{Error, Result};
pub use fock::{EnsembleId, FockState, ModeRegister};
