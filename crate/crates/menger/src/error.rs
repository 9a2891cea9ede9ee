use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("kernel singularity: evaluated at z = 0")]
    KernelSingularity,
    #[error("coincident points in a triple")]
    CoincidentPoints,
    #[error("empty measure")]
    EmptyMeasure,
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("map collision: atoms {0} and {1} have the same image")]
    MapCollision(usize, usize),
    #[error("no admissible samples found")]
    NoAdmissibleSamples,
    #[error("no candidate balls in range [{0}, {1}]")]
    NoCandidateBalls(f64, f64),
    #[error("lattice depth {0} is below the discretization scale")]
    LatticeTooDeep(usize),
    #[error("cube {0} has no doubling ancestor")]
    NoDoublingAncestor(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cube {0} is not doubling")]
    NotDoubling(usize),
    #[error("empty family of cubes")]
    EmptyFamily,
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

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
