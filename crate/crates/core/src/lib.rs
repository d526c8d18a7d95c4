//! Quantum error correction for continuously detected one-qubit errors.
//!
//! The crate synthesizes a single-generator stabilizer code, a constant
//! driving Hamiltonian and per-channel feedback (jump recovery unitaries or
//! current-proportional feedback Hamiltonians) for arbitrary detected
//! one-qubit error channels, and simulates the resulting master equations and
//! stochastic trajectories.
//!
//! * [`operators`]: dense operators, Pauli strings, Lindblad superoperators.
//! * [`codes`]: codespaces, encoded operators, Knill–Laflamme checks.
//! * [`synthesis`]: stabilizer, Hamiltonian and feedback synthesis plus certificates.
//! * [`dynamics`]: master-equation integrators and trajectory solvers.
//! * [`metrics`]: fidelity, leakage and decay-rate fits.

pub mod codes;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod operators;
pub mod synthesis;

pub use error::{Error, Result};
pub use operators::{DensityMatrix, Ket, Operator, PauliString, C64};
