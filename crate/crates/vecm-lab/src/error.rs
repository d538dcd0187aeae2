use thiserror::Error;

/// Process exit codes of the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Config = 2,
    Data = 3,
    Numerical = 4,
    /// Diagnostics hard-fail under strict mode (unstable model).
    Diagnostics = 5,
}

/// Top-level error carrying its exit classification.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Core(#[from] vecm_core::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("model unstable (largest non-unit modulus {modulus}); strict mode refuses to continue")]
    Unstable { modulus: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::Config,
            CliError::Output { .. } => ExitCode::Data,
            CliError::Unstable { .. } => ExitCode::Diagnostics,
            CliError::Core(core) => classify_core(core),
        }
    }
}

fn classify_core(err: &vecm_core::Error) -> ExitCode {
    use vecm_core::Error::*;
    match err {
        Io { .. } | BadCell { .. } | BadDate { .. } | MissingDateColumn { .. }
        | DuplicateColumn { .. } | DateGap { .. } | DateOrder { .. } | NonFinite { .. }
        | EmptyTable | UnknownVariable { .. } | TransformCoverage { .. }
        | NonPositiveLog { .. } | TooShort { .. } => ExitCode::Data,
        RankRange { .. } | CriticalValueRange { .. } | BadOrdering { .. }
        | InvalidParameter { .. } | InvalidDgp { .. } => ExitCode::Config,
        Collinear { .. } | Singular { .. } | EigenFailure { .. } | BadEigenvalue { .. }
        | SingularNormalization { .. } | NotConverged { .. } | BootstrapFailures { .. } => {
            ExitCode::Numerical
        }
    }
}

/// A pipeline failure tagged with the stage that produced it.
#[derive(Debug, Error)]
#[error("stage {stage}: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: CliError,
}

impl StageError {
    pub fn exit_code(&self) -> ExitCode {
        self.source.exit_code()
    }
}

pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T, E: Into<CliError>> StageContext<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|e| StageError {
            stage,
            source: e.into(),
        })
    }
}
