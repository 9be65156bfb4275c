use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be 1, 2 or 3 (got {0})")]
    Dimension(usize),

    #[error("samples per axis must be a power of two >= 8 (got {0})")]
    GridSize(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid window: {0}")]
    Window(String),

    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("truncation radius {n_max} must be below M/2 = {half}")]
    Truncation { n_max: usize, half: usize },

    #[error("truncation starvation: need an input box of radius {required}, have {available}")]
    Starvation { required: usize, available: usize },

    #[error("invalid exponent q = {0} (need q >= 1)")]
    Exponent(f64),

    #[error("exponent relation 1/q1 + 1/q2 = 1/q + 1 has no solution with q >= 1 (q1 = {q1}, q2 = {q2})")]
    YoungExponents { q1: f64, q2: f64 },

    #[error("invalid weight: {0}")]
    Weight(String),

    #[error("Sobolev indices rejected: need s1 + s2 >= 0 and s <= min(s1, s2) (s1 = {s1}, s2 = {s2}, s = {s})")]
    SobolevIndices { s1: f64, s2: f64, s: f64 },

    #[error("invalid cone: {0}")]
    Cone(String),

    #[error("too few nonempty shells in cone ({found} < 3); increase N_max or widen the cone")]
    TooFewShells { found: usize },

    #[error("distribution: {0}")]
    Distribution(String),

    #[error("quadrature did not converge to {tol:e} after {levels} refinements (last change {change:e})")]
    NoConvergence { tol: f64, levels: usize, change: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
