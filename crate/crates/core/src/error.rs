use thiserror::Error;

use crate::solver::SolveReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("precondition error: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular leading minor at k={k} (value {value:e})")]
    SingularMinor { k: usize, value: f64 },
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("block reduction undefined: {0}")]
    ReductionUndefined(String),
    #[error("ball not strictly inside the cone: {0}")]
    ConeContainment(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("stencil error: {0}")]
    Stencil(String),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("newton did not converge: {reason}")]
    NonConvergence { reason: String, report: Box<SolveReport> },
    #[error("ellipticity lost: {reason}")]
    EllipticityLoss { reason: String, report: Box<SolveReport> },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
