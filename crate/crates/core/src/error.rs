use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probability table has a negative entry {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("probabilities for settings (x={x}, y={y}) sum to {sum}, expected 1")]
    NotNormalized { x: usize, y: usize, sum: f64 },

    #[error("table is signalling (worst marginal deviation {violation:e})")]
    Signalling { violation: f64 },

    #[error("expected {expected} entries, got {got}")]
    WrongLength { expected: usize, got: usize },

    #[error("mixture needs at least one component")]
    EmptyMixture,

    #[error("{tables} tables but {weights} weights")]
    LengthMismatch { tables: usize, weights: usize },

    #[error("mixture weights must be nonnegative and sum to 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("unsupported dimension {0}; expected 2, 4 or 8")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("state is not normalised (squared norm {norm_sqr})")]
    NotNormalizedState { norm_sqr: f64 },

    #[error("operator is not hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("operator is not a density matrix: {reason}")]
    NotDensity { reason: String },

    #[error("observable must be a 2x2 hermitian operator with eigenvalues +1 and -1")]
    NotBinaryObservable,

    #[error("invalid subsystem selection: {0}")]
    InvalidMask(String),

    #[error("basis is not orthonormal (deviation {deviation:e})")]
    BasisNotOrthonormal { deviation: f64 },

    #[error("basis has {got} vectors, space has dimension {dim}")]
    IncompleteBasis { got: usize, dim: usize },

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("post-selection is impossible: ABL denominator {denominator:e} is not above 1e-12")]
    VanishingDenominator { denominator: f64 },

    #[error("{0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::OutOfRange { name, value, range }
    }
}
