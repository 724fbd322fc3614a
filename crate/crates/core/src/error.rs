use thiserror::Error;

/// Errors raised by the solver pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("invalid boundary: {0}")]
    Boundary(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("kernel domain error: {0}")]
    KernelDomain(String),

    #[error("coincident source and field points on sub-arcs {i} and {j} (t={t}, s={s})")]
    Coincidence { i: usize, j: usize, t: f64, s: f64 },

    #[error("non-finite matrix entry at sub-arc pair ({i},{j}), nodes ({row_node},{col_node})")]
    Assembly {
        i: usize,
        j: usize,
        row_node: usize,
        col_node: usize,
    },

    #[error("matrix is numerically singular (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("solve residual {residual:e} exceeds bound {bound:e}")]
    Residual { residual: f64, bound: f64 },

    #[error("point ({x}, {y}) is not in the exterior domain")]
    NotExterior { x: f64, y: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Configuration problems are user errors; everything else is numerical.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parameter(_) | Error::Boundary(_) | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
