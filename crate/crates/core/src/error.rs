use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("non-finite value at pixel index {0}")]
    NonFinite(usize),

    #[error("malformed image file: {0}")]
    Malformed(String),

    #[error("unsupported image: {0}")]
    Unsupported(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("image of size {size} is too small for a {levels}-level transform (support width {required})")]
    ImageTooSmall {
        size: usize,
        levels: usize,
        required: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("cascade algorithm did not converge: {0}")]
    CascadeDiverged(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("convergence check failed: {0}")]
    NotConverging(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
