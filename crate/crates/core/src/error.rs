use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("resolution {0} is too small (need at least 4)")]
    ResolutionTooSmall(usize),
    #[error("unsupported stencil order {0} (expected 1, 2 or 3)")]
    UnsupportedStencil(usize),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("hexagon mask leaves no active vertices")]
    EmptyMask,
    #[error("domain {0} has no boundary faces")]
    NoBoundary(String),
    #[error("unknown face label {0}")]
    UnknownFace(String),
    #[error("faces {0} and {1} are not an opposite pair")]
    NotOpposite(String, String),
    #[error("operation requires {expected}, got {found}")]
    WrongTopology { expected: &'static str, found: String },
    #[error("tensor at vertex {vertex} is not positive definite (min eigenvalue {min_eig})")]
    NotSpd { vertex: usize, min_eig: f64 },
    #[error("matrix is not symmetric positive definite")]
    MatrixNotSpd,
    #[error("field breaks the quotient identification at vertex {0}")]
    NotInvariant(usize),
    #[error("invalid eigenvalue range [{0}, {1}]")]
    InvalidRange(f64, f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("vertices {0} and {1} are not joined by an edge")]
    NotAnEdge(usize, usize),
    #[error("malformed polyline: {0}")]
    MalformedPolyline(String),
    #[error("source set is empty")]
    EmptySources,
    #[error("homotopy class is trivial")]
    TrivialClass,
    #[error("domain {0} is simply connected; no systole")]
    SimplyConnected(String),
    #[error("function is not 1-Lipschitz on edge ({0}, {1}): excess {2}")]
    NotLipschitz(usize, usize, f64),
    #[error("no transversal sample point found for the degree count")]
    NonTransversal,
    #[error("cover leaves vertex {0} uncovered")]
    UncoveredVertex(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
