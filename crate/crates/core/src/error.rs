use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NonSymmetric(f64),
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not positive definite (min eigenvalue {min_eigen:.3e}, floor {floor:.3e})")]
    NotSpd { min_eigen: f64, floor: f64 },
    #[error("exponent must be non-zero")]
    ZeroExponent,
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: String, got: String },
    #[error("empty point set")]
    EmptySet,
    #[error("metric {0} is not supported by this operation")]
    UnsupportedMetric(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("matrix is rank deficient (rank < {0})")]
    RankDeficient(usize),
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("bad gamma grid: {0}")]
    BadGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("number of clusters k={k} must lie in [1, {m}]")]
    BadK { k: usize, m: usize },
    #[error("kernel matrix is not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("number of components l={l} must lie in [1, {m}]")]
    BadL { l: usize, m: usize },
    #[error("within-class scatter is singular; use a positive ridge")]
    SingularScatter,
    #[error("requested {dims} discriminant dimensions but at most {max} are available")]
    BadDims { dims: usize, max: usize },
    #[error("training labels contain a single class")]
    OneClass,
    #[error("image too small: {height}x{width}")]
    TooSmall { height: usize, width: usize },
    #[error("rectangle {0:?} lies outside the image")]
    RectOutOfBounds((usize, usize, usize, usize)),
    #[error("rectangle has {pixels} pixels; at least {needed} required")]
    TooFewPixels { pixels: usize, needed: usize },
    #[error("no positive samples")]
    NoPositives,
    #[error("frames must be at least two images of equal size")]
    FrameMismatch,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            NoConvergence(_) | Numerical(_) | NotPsd(_) | SingularScatter | NotSpd { .. } => {
                ErrorCategory::Numerical
            }
            InvalidParameter(_)
            | BadGrid(_)
            | BadK { .. }
            | BadL { .. }
            | BadDims { .. }
            | ZeroExponent
            | UnsupportedMetric(_) => ErrorCategory::Usage,
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn dims(expected: impl ToString, got: impl ToString) -> Self {
        Error::DimMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
