use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 8")]
    InvalidGrid(usize),

    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),

    #[error("multiplier value {value} at mode {k:?} lies outside the unit disk")]
    MultiplierOutOfDisk { k: [i64; 3], value: f64 },

    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),

    #[error("field is not divergence free (relative residual {0:.3e})")]
    NotDivergenceFree(f64),

    #[error("field has nonzero mean {0:?}")]
    NonzeroMean([f64; 3]),

    #[error("tensor lies outside the decomposition cone: coefficient {coefficient:.3e} for direction {direction:?}")]
    OutOfCone { direction: [f64; 3], coefficient: f64 },

    #[error("Reynolds stress leaves the cone at grid point {index} ({point:?}): coefficient {coefficient:.3e} for direction {direction:?}")]
    ConeViolation { index: usize, point: [f64; 3], direction: [f64; 3], coefficient: f64 },

    #[error("ill-conditioned direction system (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("no rational rotation keeps {0} direction sets pairwise disjoint")]
    RotationNotFound(usize),

    #[error("invalid pipe parameters: {0}")]
    InvalidPipe(String),

    #[error("grid of size {n} cannot resolve frequency {required}")]
    Unresolved { n: usize, required: f64 },

    #[error("overlapping supports: {0}")]
    Overlap(String),

    #[error("time step too large: need at least {required} steps (got {steps})")]
    Cfl { steps: usize, required: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad field file: {0}")]
    Format(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used by the command line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridMismatch(..) => "grid_mismatch",
            Error::MultiplierOutOfDisk { .. } => "multiplier_out_of_disk",
            Error::InvalidKernel(_) => "invalid_kernel",
            Error::NotDivergenceFree(_) => "not_divergence_free",
            Error::NonzeroMean(_) => "nonzero_mean",
            Error::OutOfCone { .. } => "out_of_cone",
            Error::ConeViolation { .. } => "cone_violation",
            Error::IllConditioned(_) => "ill_conditioned",
            Error::RotationNotFound(_) => "rotation_not_found",
            Error::InvalidPipe(_) => "invalid_pipe",
            Error::Unresolved { .. } => "unresolved",
            Error::Overlap(_) => "overlap",
            Error::Cfl { .. } => "cfl",
            Error::InvalidParams(_) => "invalid_params",
            Error::Io(_) => "io",
            Error::Format(_) => "format",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
