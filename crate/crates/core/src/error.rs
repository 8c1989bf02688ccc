use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("invalid media spec: {0}")]
    InvalidMedia(String),

    #[error("invalid argument: {0}")]
    InvalidInput(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e}, tol {tol:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("positivity set touches the truncation box at t = {t}")]
    SupportTouchesBox { t: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) | Error::SupportTouchesBox { .. } => 2,
            Error::NotConverged { .. } => 3,
            Error::Config(_)
            | Error::InvalidGrid(_)
            | Error::InvalidMask(_)
            | Error::InvalidMedia(_)
            | Error::InvalidInput(_) => 4,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
