use thiserror::Error;

/// Errors raised by grid construction, solvers and samplers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "CFL condition violated: lambda = {lambda:.6e} exceeds bound {bound:.6e} \
         (admissible dt <= {admissible_dt:.6e})"
    )]
    Cfl { lambda: f64, bound: f64, admissible_dt: f64 },

    #[error("kernel mass {mass:.15} differs from 1 by more than 1e-12")]
    KernelMass { mass: f64 },

    #[error("time {t} outside the noise path range [0, {t_max}]")]
    NoiseOutOfRange { t: f64, t_max: f64 },

    #[error("acceptance-rejection exceeded {max} redraws at step {step} (state {state})")]
    RejectionLimit { step: usize, state: f64, max: usize },

    #[error("no noise density available for time step {0}")]
    MissingDensity(usize),

    #[error("solve result carries no velocity fields; re-run with velocity recording")]
    MissingVelocity,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time stamp mismatch: {0}")]
    StampMismatch(String),

    #[error("realization {index} failed: {source}")]
    Realization {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
