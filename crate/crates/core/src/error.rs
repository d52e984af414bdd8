use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("qubit {0} appears more than once among gate targets and controls")]
    DuplicateQubit(usize),

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state has norm {norm:.3e}, cannot be normalized")]
    ZeroNorm { norm: f64 },

    #[error("measurement on a numerically dead state (p0 = {p0:.3e}, p1 = {p1:.3e})")]
    DeadState { p0: f64, p1: f64 },

    #[error("dense operation on {n_qubits} qubits exceeds the limit of {limit}")]
    SizeLimit { n_qubits: usize, limit: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid Pauli letter '{0}'")]
    InvalidPauli(char),

    #[error("operator is not Hermitian (imaginary residue {residue:.3e})")]
    NonHermitian { residue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigenstate tracking is ambiguous at s = {s}: {reason}")]
    TrackingAmbiguity { s: f64, reason: String },

    #[error("input is not an eigenstate of the unitary (residual {residual:.3e})")]
    NotEigenstate { residual: f64 },

    #[error("cost function became non-finite at iteration {iteration}")]
    NonFiniteCost { iteration: usize },
}
