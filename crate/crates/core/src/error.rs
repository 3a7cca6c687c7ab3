use thiserror::Error;

/// Errors produced by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site {site} out of range for a chain of {n_qubits} qubits")]
    SiteOutOfRange { site: usize, n_qubits: usize },

    #[error("{n_qubits} qubits exceeds the dense cap of {max}")]
    TooManyQubits { n_qubits: usize, max: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("expected {expected} blocks, split has {found}")]
    BlockCount { expected: usize, found: usize },

    #[error("unknown block `{0}`")]
    UnknownBlock(String),

    #[error("parameter vector has length {found}, ansatz expects {expected}")]
    ParameterLength { expected: usize, found: usize },

    #[error("invalid ansatz: {0}")]
    InvalidAnsatz(String),

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error(
        "imaginary residue {imag:e} of the parameter velocity exceeds tolerance {tol:e}"
    )]
    ImaginaryResidue { imag: f64, tol: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("integrator exceeded {max_steps} steps before t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("non-finite value in the right-hand side at t = {t}")]
    NonFinite { t: f64 },

    #[error("zero initial state")]
    ZeroState,

    #[error("degenerate trace denominator ({0:e}); blocks are proportional")]
    DegenerateTraces(f64),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("cannot parse circuit text at line {line}: {msg}")]
    CircuitParse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
