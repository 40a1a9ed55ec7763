//! Simulation of cavity-mediated GHZ-state generation in NV-center qubits
//! coupled to a whispering-gallery-mode resonator.
//!
//! Layers, bottom up: [`hilbert`] (spaces and operators), [`model`]
//! (Hamiltonian levels), [`engine`] (time evolution), [`protocol`]
//! (gate schedules and fidelities) and [`budget`] (decoherence estimates).

pub mod budget;
pub mod engine;
pub mod error;
pub mod exec;
pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod protocol;
pub mod validation;

pub use error::{Error, Result};
pub use exec::Exec;
pub use hilbert::{DensityMatrix, HilbertLayout, OperatorMatrix, SpinState, StateVector};
pub use model::{HamiltonianRecipe, LambdaParams, SimParams};
