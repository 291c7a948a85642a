use thiserror::Error;

use crate::angle::RationalAngle;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AngleError {
    #[error("angle denominator is zero")]
    ZeroDenominator,
    #[error("angle arithmetic overflowed i64")]
    Overflow,
    #[error("cannot parse angle expression `{0}`")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is too small (need q >= 2)")]
    ModulusTooSmall(u64),
    #[error("modulus not prime: {q} has factor {factor}")]
    NotPrime { q: u64, factor: u64 },
    #[error("value {value} is not reduced modulo {q}")]
    NotReduced { value: u64, q: u64 },
    #[error("duplicate abscissa x = {0}")]
    DuplicateAbscissa(u64),
    #[error("abscissa x = 0 is reserved for the dealer secret")]
    ZeroAbscissa,
    #[error("w = {w} outside [1, {max}]", max = .q - 1)]
    WeightOutOfRange { w: u64, q: u64 },
    #[error("participant index {index} outside a set of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("angle sum {0} is not a whole number of turns")]
    NotWholeTurns(RationalAngle),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("qubit count {0} outside [1, 12]")]
    QubitCount(usize),
    #[error("qubit {qubit} out of range for a {n}-qubit state")]
    QubitIndex { qubit: usize, n: usize },
    #[error("two-qubit gate passed to a single-qubit slot")]
    NotSingleQubit,
    #[error("controlled-Z needs two distinct qubits, got {0} twice")]
    SameQubit(usize),
    #[error("qubit count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("qubit {qubit} is entangled with the rest (off-branch norm {residual:e})")]
    Entangled { qubit: usize, residual: f64 },
    #[error("amplitude vector has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("amplitude vector length {0} is not a power of two")]
    BadLength(usize),
    #[error("branch has zero probability")]
    ImpossibleBranch,
    #[error("vertex {vertex} is not in a {n}-vertex graph")]
    BadVertex { vertex: usize, n: usize },
    #[error("statevector dump line {line}: {msg}")]
    Dump { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("field `{field}`: {msg}")]
    Invalid { field: &'static str, msg: String },
    #[error("secret {index} is not a normalized single-qubit state")]
    BadSecret { index: usize },
}

impl ConfigError {
    pub(crate) fn invalid(field: &'static str, msg: impl Into<String>) -> Self {
        ConfigError::Invalid { field, msg: msg.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranscriptError {
    #[error("transcript line {line}: {msg}")]
    Decode { line: usize, msg: String },
    #[error("sequence numbers not strictly increasing at {0}")]
    Sequence(u64),
}
