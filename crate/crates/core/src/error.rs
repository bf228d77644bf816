use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("columns are not orthonormal: ‖XᵀX − I‖_F = {deviation:e} exceeds {tolerance:e}")]
    NotOrthonormal { deviation: f64, tolerance: f64 },

    #[error("count matrix is all zero")]
    ZeroCounts,

    #[error("degenerate spectral gap at k = {k}: λ_{k} = λ_{next} = {value}", next = k + 1)]
    DegenerateGap { k: usize, value: f64 },

    #[error("PIP matrix has zero norm")]
    ZeroNorm,

    #[error("linear algebra routine failed: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end: 1 for usage errors,
    /// 2 for bad or unreadable data, 3 for numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateGap { .. } | Error::ZeroNorm | Error::Linalg(_) => 3,
            Error::InvalidArgument(_) => 1,
            _ => 2,
        }
    }
}
