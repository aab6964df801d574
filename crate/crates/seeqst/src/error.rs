use thiserror::Error;

/// Errors produced by planning, simulation, and estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("element index ({row}, {col}) out of range for {n_qubits} qubits")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_qubits: usize,
    },

    #[error("subset mask {mask:#b} out of range for {n_qubits} qubits")]
    MaskOutOfRange { mask: usize, n_qubits: usize },

    #[error("elements mix different qubit counts ({0} vs {1})")]
    MixedQubitCounts(usize, usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{n_qubits} qubits exceeds the {limit}-qubit limit of the {engine} engine")]
    Capacity {
        engine: &'static str,
        limit: usize,
        n_qubits: usize,
    },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("invalid noise parameter {value} (must lie in [0, 1])")]
    InvalidNoiseParameter { value: f64 },

    #[error("not a valid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("shots must be at least 1")]
    ZeroShots,

    #[error("negative threshold {0}")]
    NegativeThreshold(f64),

    #[error("measurement records do not match subset {mask:#b}: {reason}")]
    RecordMismatch { mask: usize, reason: String },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid bitstring {0:?} for {1} qubits")]
    InvalidBitstring(String, usize),

    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),

    #[error("missing estimate for element ({row}, {col})")]
    MissingEstimate { row: usize, col: usize },

    #[error("scaling fit needs {0}")]
    DegenerateDesign(&'static str),

    #[error("M = {m} exceeds N = {n}")]
    BlockSizeOutOfRange { m: usize, n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for capacity-limit errors, which the CLI maps to a dedicated
    /// exit code.
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }
}
