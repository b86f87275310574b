use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degree {degree} exceeds the configured cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("degenerate moment sequence: {0}")]
    DegenerateMoments(String),

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("kernel is not square-integrable: {0}")]
    NotSquareIntegrable(String),

    #[error("kernel spec: {0}")]
    KernelSpec(String),

    /// Caller asked a regime-specific evaluator for parameters outside its regime.
    #[error("regime dispatch: {0}")]
    Dispatch(String),

    /// Root selection contradicted uniqueness of the upper-half-plane solution.
    #[error("{count} roots with positive imaginary part at z = {z}: {roots:?}")]
    RootSelection {
        count: usize,
        z: Complex64,
        roots: [Complex64; 3],
    },

    #[error("explicit density {explicit} disagrees with root-based density {from_roots} at u = {u}")]
    CurveRejected {
        u: f64,
        explicit: f64,
        from_roots: f64,
    },

    #[error("eigensolver did not converge on a {n}x{n} matrix (iteration cap {cap})")]
    NoConvergence { n: usize, cap: usize },

    #[error("matrix of size {n}x{n} exceeds the memory ceiling n <= {ceiling}")]
    Resource { n: usize, ceiling: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
