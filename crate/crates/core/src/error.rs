use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps these onto process exit codes: validation-style failures
/// (bad parameters, malformed inputs, degenerate data) exit with 2,
/// optimizer convergence failures with 3, everything else with 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    /// SMO hit its iteration cap. Carries the best iterate found so the
    /// caller can inspect or reuse it.
    #[error("svm solver hit the iteration cap ({context})")]
    SvmIterationCap {
        context: String,
        best: Box<crate::svm::BinarySvmModel>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 validation, 3 convergence, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_)
            | Error::Input(_)
            | Error::Validation(_)
            | Error::Degenerate(_)
            | Error::Normalization(_)
            | Error::Config(_) => 2,
            Error::Convergence(_) | Error::SvmIterationCap { .. } => 3,
            _ => 1,
        }
    }

    /// Prefix the message with the pipeline stage it came from.
    pub fn in_stage(self, stage: &str) -> Error {
        match self {
            Error::Parameter(m) => Error::Parameter(format!("[{stage}] {m}")),
            Error::Input(m) => Error::Input(format!("[{stage}] {m}")),
            Error::Validation(m) => Error::Validation(format!("[{stage}] {m}")),
            Error::Degenerate(m) => Error::Degenerate(format!("[{stage}] {m}")),
            Error::Normalization(m) => Error::Normalization(format!("[{stage}] {m}")),
            Error::Convergence(m) => Error::Convergence(format!("[{stage}] {m}")),
            Error::SvmIterationCap { context, best } => Error::SvmIterationCap {
                context: format!("[{stage}] {context}"),
                best,
            },
            Error::Config(m) => Error::Config(format!("[{stage}] {m}")),
            other => other,
        }
    }
}
