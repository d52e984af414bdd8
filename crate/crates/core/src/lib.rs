//! Statevector simulation of eigenvalue-preparation algorithms.
//!
//! The crate is organised bottom up:
//!
//! - [`statevector`]: dense n-qubit states, gates and measurement.
//! - [`pauli`]: Pauli strings and sums, Ising/MaxCut builders and the exact
//!   spectral oracle every other module is checked against.
//! - [`trotter`]: first and second order product formulas and a truncated
//!   Baker-Campbell-Hausdorff series.
//! - [`adiabatic`]: interpolating schedules, gap profiles, the sufficient
//!   run-time bound and the Hamiltonian translator.
//! - [`fermion`]: ladder-operator algebra, the Jordan-Wigner encoding,
//!   Thouless state preparation and unitary coupled cluster.
//! - [`variational`]: Pauli-generator ansatze, parameter-shift gradients,
//!   gradient descent, QAOA and continuous MaxCut.
//! - [`phase`]: QFT, phase estimation (full and iterative) and the rodeo
//!   algorithm.
//!
//! Qubit `q` is bit `q` of an amplitude index throughout.

pub mod adiabatic;
pub mod error;
pub mod fermion;
pub mod linalg;
pub mod pauli;
pub mod phase;
pub mod rng;
pub mod stats;
pub mod statevector;
pub mod trotter;
pub mod variational;

pub use error::{Error, Result};
pub use pauli::{build_ising, ComplexPauliSum, Graph, Pauli, PauliString, PauliSum, Spectrum};
pub use statevector::{Gate, GateKind, MeasurementRecord, StateVector};
pub use adiabatic::{Ramp, Schedule};
pub use fermion::{FermionOperator, OrbitalRotation, UCCParameters};
pub use phase::{PhaseUnitary, RodeoConfig, RodeoEngine};
pub use variational::{Ansatz, Layer, QAOASchedule};
