//! Thermal states of the cluster Hamiltonian with a local Z field: exact
//! oracles, PEPS bond construction and decomposition, configuration sampling,
//! percolation statistics, measurement simulation and phase-diagram boundaries.

pub mod bond;
pub mod decomposition;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod linalg;
pub mod measurement;
pub mod percolation;
pub mod regions;
pub mod sampler;

pub use error::{Error, Result};
