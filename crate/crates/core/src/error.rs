use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is numerically singular (smallest singular value {0:e})")]
    SingularInput(f64),
    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("matrix is not skew-hermitian (residual {0:e})")]
    NotSkew(f64),
    #[error("matrix is not an orthogonal projection (residual {0:e})")]
    NotProjection(f64),
    #[error("matrix columns are not orthonormal (residual {0:e})")]
    NotIsometry(f64),
    #[error("bad resolution: {0}")]
    BadResolution(String),
    #[error("form degree {got} does not match expected {expected}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("arity {arity} exceeds domain dimension {dim}")]
    ArityTooLarge { arity: usize, dim: usize },
    #[error("form degree {degree} exceeds domain dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },
    #[error("frame is degenerate (smallest singular value {0:e})")]
    DegenerateFrame(f64),
    #[error("declared bandwidth {bandwidth} violated (leak {leak:e})")]
    BandwidthViolation { bandwidth: usize, leak: f64 },
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("window must have n_plus = n_minus (got {n_minus}, {n_plus})")]
    AsymmetricWindow { n_minus: usize, n_plus: usize },
    #[error("unitary path does not start at the identity (residual {0:e})")]
    BadPathStart(f64),
    #[error("path is not a loop (endpoint mismatch {0:e})")]
    NotALoop(f64),
    #[error("transported frame lost rank (smallest singular value {0:e})")]
    LostRank(f64),
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),
    #[error("homotopy does not start at the basepoint (residual {0:e})")]
    NotBasedAtIdentity(f64),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
