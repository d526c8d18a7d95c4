use thiserror::Error;

/// Errors produced by operator algebra, code construction, synthesis and
/// the integrators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Pauli strings act on different qubit counts ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("matrix must be square with power-of-two dimension, got {rows}x{cols}")]
    NotQubitOperator { rows: usize, cols: usize },

    #[error("at most {max} qubits are supported, requested {requested}")]
    TooManyQubits { requested: usize, max: usize },

    #[error("invalid Pauli string {0:?}")]
    ParsePauli(String),

    #[error("invalid stabilizer: {0}")]
    InvalidStabilizer(String),

    #[error("stabilizer is not an involution (|S^2 - I|max = {deviation:e})")]
    NotInvolution { deviation: f64 },

    #[error("encoded operators need the conjugating local unitaries of the stabilizer")]
    MissingConjugators,

    #[error("invalid error channel: {0}")]
    InvalidChannel(String),

    #[error("more than one error channel acts on qubit {qubit}")]
    DuplicateChannel { qubit: usize },

    #[error("no error channel given for qubit {qubit}")]
    MissingChannel { qubit: usize },

    #[error("{{S,D}} != 0 on qubit {qubit} (|{{s,D}}|max = {residual:e})")]
    NotAnticommuting { qubit: usize, residual: f64 },

    #[error("{what} is not Hermitian (|M - M^dag|max = {deviation:e})")]
    NonHermitian { what: String, deviation: f64 },

    #[error("Knill-Laflamme condition fails for channel on qubit {qubit} (off-diagonal residual {residual:e})")]
    KnillLaflamme { qubit: usize, residual: f64 },

    #[error("wrong scheme mode: expected {expected}, found {found}")]
    ModeMismatch { expected: String, found: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("step bound violated: dt * max rate = {value} > {limit}")]
    StepBound { value: f64, limit: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical integrity failure at t = {time}: {detail}")]
    NumericalIntegrity { time: f64, detail: String },

    #[error("trajectory records do not share a time grid")]
    GridMismatch,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
