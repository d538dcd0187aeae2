use thiserror::Error;

/// Errors produced by the estimation and data-handling routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse cell at row {row}, column {column}: {value:?}")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("cannot parse date {value:?}: expected YYYYQn or a first-day-of-quarter ISO date")]
    BadDate { value: String },

    #[error("date column {column:?} not found in header")]
    MissingDateColumn { column: String },

    #[error("duplicate column name {name:?}")]
    DuplicateColumn { name: String },

    #[error("gap in quarterly dates: expected {expected} after {previous}, found {found}")]
    DateGap {
        previous: String,
        expected: String,
        found: String,
    },

    #[error("dates not strictly increasing at {found} (previous {previous})")]
    DateOrder { previous: String, found: String },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: String },

    #[error("empty table: need at least one row and one column")]
    EmptyTable,

    #[error("unknown variable {name:?}")]
    UnknownVariable { name: String },

    #[error("transform spec does not cover variable {name:?} exactly once")]
    TransformCoverage { name: String },

    #[error("log transform requested for {column:?} but row {row} holds {value} <= 0")]
    NonPositiveLog {
        column: String,
        row: usize,
        value: f64,
    },

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("regressor matrix is rank deficient; collinear columns: {columns:?}")]
    Collinear { columns: Vec<String> },

    #[error("{what} is singular or not positive definite")]
    Singular { what: String },

    #[error("eigenvalue solve failed: {what}")]
    EigenFailure { what: String },

    #[error("eigenvalue {value} outside [0, 1); the moment matrices are degenerate")]
    BadEigenvalue { value: f64 },

    #[error("rank {rank} out of range for a {k}-variable system")]
    RankRange { rank: usize, k: usize },

    #[error("no critical values embedded for {dim} common trends (supported: 1..=12)")]
    CriticalValueRange { dim: usize },

    #[error("ordering must be a permutation of the variable names; problem near {name:?}")]
    BadOrdering { name: String },

    #[error("normalization block on {variables:?} is singular")]
    SingularNormalization { variables: Vec<String> },

    #[error("restricted estimation did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("{failed} of {total} bootstrap replications failed to estimate (cap is 5%)")]
    BootstrapFailures { failed: usize, total: usize },

    #[error("invalid parameter: {what}")]
    InvalidParameter { what: String },

    #[error("invalid process specification: {what}")]
    InvalidDgp { what: String },
}
