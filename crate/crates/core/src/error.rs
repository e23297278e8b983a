use thiserror::Error;

/// Errors raised by the toolkit. Check failures are reported in the
/// report types, not through this enum.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("radius {r} outside admissible interval (0, {upper}]")]
    Domain { r: f64, upper: f64 },

    #[error("the center point has no polar coordinates")]
    CenterSingularity,

    #[error("point with |x| = {norm} lies outside the unit ball")]
    OutsideBall { norm: f64 },

    #[error("invalid warp profile: {0}")]
    InvalidProfile(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {error:e} after {subdivisions} subdivisions)")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {index}")]
    DegenerateTriangle { index: usize },

    #[error("{0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
