use thiserror::Error;

/// Errors emitted by the decomposition and fusion pipeline.
///
/// The variants are grouped so a frontend can map them onto coarse exit
/// classes: bad arguments, bad data, numerical failure.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two operands that must agree in shape or geometry do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A matrix carried NaN or Inf across a public operation boundary.
    #[error("non-finite values in {context}")]
    NonFinite { context: String },

    /// A dense factorization (SVD, inversion) failed in the backend.
    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    /// NaN/Inf appeared mid-solve in the ALM iteration.
    #[error("numerical divergence in ALM solver at iteration {iteration}")]
    Divergence { iteration: usize },

    /// A patch pool is too small for the requested training-set size.
    #[error("{label} pool {available} < {requested}")]
    InsufficientPool {
        label: &'static str,
        available: usize,
        requested: usize,
    },

    /// A projection-matrix file is malformed or has the wrong magic/version.
    #[error("projection file format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by caller-supplied parameters.
    pub fn is_argument_error(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::ShapeMismatch(_))
    }

    /// True for numerical failures (divergence, SVD breakdown, NaN/Inf).
    pub fn is_numerical_error(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::Factorization(_) | Error::Divergence { .. }
        )
    }

    /// True for errors caused by input data or files rather than parameters.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Format(_) | Error::InsufficientPool { .. }
        )
    }
}
