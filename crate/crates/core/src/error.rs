use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed scenario: {0}")]
    Scenario(String),

    #[error("arc `{arc}` references unknown node `{node}`")]
    UnknownNode { arc: String, node: String },

    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),

    #[error("boundary node `{node}` has {degree} incident arcs, expected exactly one")]
    BoundaryDegree { node: String, degree: usize },

    #[error("junction node `{node}`: {reason}")]
    Junction { node: String, reason: String },

    #[error("arc `{arc}` has non-positive length {length}")]
    NonPositiveLength { arc: String, length: f64 },

    #[error("arc `{arc}` joins node `{node}` to itself")]
    SelfLoop { arc: String, node: String },

    #[error("arc `{0}` is unbounded and must be truncated before building a grid")]
    Unbounded(String),

    #[error("network is not connected")]
    Disconnected,

    #[error("network has no arcs")]
    EmptyNetwork,

    #[error("arc `{arc}` of length {length} is not an integer multiple of dx = {dx}")]
    NonCommensurate { arc: String, length: f64, dx: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("tabulated lagrangian: {0}")]
    Table(String),

    #[error("lagrangian is not coercive: {0}")]
    NonCoercive(String),

    #[error("flux function is not concave: {0}")]
    NonConcaveFlux(String),

    #[error("expected {expected} gradient components, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("position {s} is outside arc `{arc}` (length {length})")]
    OutOfRange { arc: String, s: f64, length: f64 },

    #[error("control bound {mu} times dt {dt} exceeds the shortest arc length {min_length}")]
    CrossesTwoNodes { mu: f64, dt: f64, min_length: f64 },

    #[error("non-finite value at step {step}, sample {sample}")]
    NonFinite { step: usize, sample: usize },

    #[error("fixed-point iteration did not converge after {iterations} steps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("grids are not commensurate: {0}")]
    NonCommensurateGrids(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, used as the prefix of CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Scenario(_) | Error::Json(_) => "scenario",
            Error::UnknownNode { .. }
            | Error::DuplicateId(_)
            | Error::BoundaryDegree { .. }
            | Error::Junction { .. }
            | Error::NonPositiveLength { .. }
            | Error::SelfLoop { .. }
            | Error::Unbounded(_)
            | Error::Disconnected
            | Error::EmptyNetwork => "network",
            Error::NonCommensurate { .. } | Error::NonCommensurateGrids(_) => "grid",
            Error::InvalidParam(_) | Error::CrossesTwoNodes { .. } => "params",
            Error::Table(_) | Error::NonCoercive(_) | Error::NonConcaveFlux(_) | Error::Arity { .. } => {
                "hamiltonian"
            }
            Error::OutOfRange { .. } => "interpolation",
            Error::NonFinite { .. } | Error::NonConvergence { .. } => "solver",
            Error::Io(_) | Error::Csv(_) => "io",
        }
    }
}
