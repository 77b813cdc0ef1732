use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrand returned {value} at r = {at:e}")]
    NonFinite { at: f64, value: f64 },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("dimension N = {0} is not supported on the deterministic path; use the Monte Carlo integrator")]
    UnsupportedDimension(usize),

    #[error("regularity: {0}")]
    Regularity(String),

    #[error("accuracy: {0}")]
    Accuracy(String),

    #[error("extrapolation needs at least 3 samples, got {0}")]
    Arity(usize),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("incomplete report: {0}")]
    IncompleteReport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Cell {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach the computation cell (kernel, ε, R, u) that failed.
    pub fn in_cell(self, context: impl Into<String>) -> Self {
        Error::Cell {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with cell context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Cell { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::NonFinite { .. }
                | Error::Divergent(_)
                | Error::NonConvergence(_)
                | Error::Accuracy(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
