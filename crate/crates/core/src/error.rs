use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the reference interval `[-1, 1]`.
    #[error("domain error: {what} = {value} lies outside [-1, 1]")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    /// An iterative numerical procedure did not converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("degree {requested} exceeds the maximum degree {max}")]
    Range { requested: usize, max: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The model failed at a projection node or a validation sample.
    #[error("model evaluation failed at {site} {index} ({point:?}): {message}")]
    Model {
        site: &'static str,
        index: usize,
        point: Vec<f64>,
        message: String,
    },

    #[error("Sobol indices are undefined for a surrogate with zero variance")]
    UndefinedIndices,

    #[error("model has no poles: {0}")]
    NoPole(String),

    #[error("degenerate Bernstein ellipse: pole {0} lies on [-1, 1]")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Tabulated evaluations do not match the projection grid.
    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error originates in numerical work rather than in user
    /// input. The CLI uses this to pick its exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_)
                | Error::Domain { .. }
                | Error::Model { .. }
                | Error::UndefinedIndices
                | Error::Degenerate(_)
                | Error::NoPole(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}
