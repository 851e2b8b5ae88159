use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field is missing or malformed.
    #[error("{field}: {message}")]
    Config { field: String, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unstable dynamics: {0}")]
    Unstable(String),

    #[error("regime violation: {0}")]
    Regime(String),

    #[error("intracavity amplitude did not converge (optical bistability); fixed points |alpha|^2 = {fixed_points:?}")]
    Bistable { fixed_points: Vec<f64> },

    #[error("time step {dt:e} s exceeds the bound {bound:e} s")]
    StepSize { dt: f64, bound: f64 },

    #[error("unphysical covariance at t = {time:e} s: smallest symplectic eigenvalue {nu_min}")]
    Unphysical { time: f64, nu_min: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::Invalid(_) => "invalid",
            Error::Unstable(_) => "unstable",
            Error::Regime(_) => "regime",
            Error::Bistable { .. } => "bistable",
            Error::StepSize { .. } => "step_size",
            Error::Unphysical { .. } => "unphysical",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Schema { .. } => "schema",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
