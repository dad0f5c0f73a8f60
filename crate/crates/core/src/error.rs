use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported lattice: {0}")]
    UnsupportedLattice(String),

    #[error("unknown lattice family `{0}`")]
    UnknownLattice(String),

    #[error("no {mode} threshold configured for lattice `{kind}`")]
    MissingThreshold { kind: String, mode: String },

    #[error("custom lattices have no single coordination number")]
    NoCoordination,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("{qubits} qubits exceeds the cap of {cap}")]
    CapExceeded { qubits: usize, cap: usize },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid bond parameters: {0}")]
    InvalidBond(String),

    #[error("bond solver found no physical root: {0}")]
    NoPhysicalRoot(String),

    #[error("state is not separable (PPT violated by {0:.3e})")]
    NotSeparable(f64),

    #[error("entangled component is not a CZ-dressed product state")]
    NotCzProduct,

    #[error("enumeration of {0} configurations exceeds the limit")]
    EnumerationTooLarge(f64),

    #[error("zero normalizer in posterior: {0}")]
    ZeroNormalizer(String),

    #[error("root not bracketed: f({lo}) = {flo}, f({hi}) = {fhi}")]
    NotBracketed { lo: f64, hi: f64, flo: f64, fhi: f64 },

    #[error("invalid measurement pattern: {0}")]
    InvalidPattern(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
