//! Semi-Lagrangian solvers for Hamilton-Jacobi equations posed on networks.

pub mod analysis;
pub mod error;
pub mod hamiltonian;
pub mod network;
pub mod output;
pub mod scenario;
pub mod scheme;
pub mod traffic;

pub use error::{Error, Result};
pub use scenario::{load_network, Scenario};
