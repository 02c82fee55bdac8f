use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("size {requested} exceeds the configured cap {cap}")]
    CapExceeded { requested: usize, cap: usize },

    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),

    #[error("invalid Kraus set: {0}")]
    InvalidKraus(String),

    #[error("Kraus set is not minimal: level-1 dimension {rank} < {n} operators")]
    NotMinimal { rank: usize, n: usize },

    #[error("level {level} is out of range (built up to {max})")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("singular correlation{}: smallest/largest eigenvalue ratio {ratio:e}", level.map(|m| format!(" at level {m}")).unwrap_or_default())]
    SingularCorrelation { level: Option<usize>, ratio: f64 },

    #[error("matrix is not Hermitian within tolerance (residual {0:e})")]
    NotHermitian(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("index {index} out of range 0..{n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("degree mismatch in term {term}: starred length {starred} != unstarred length {unstarred}")]
    DegreeMismatch { term: usize, starred: usize, unstarred: usize },

    #[error("invalid catalog parameters: {0}")]
    InvalidCatalog(String),

    #[error("non-finite entry produced by {0}")]
    NonFinite(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
