use thiserror::Error;

/// Errors shared by the solver modules.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScatterError {
    #[error("line defects {0} and {1} coincide")]
    DuplicateLine(usize, usize),
    #[error("point defects {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("point defect {0} lies on line defect {1}")]
    PointOnLine(usize, usize),
    #[error("non-finite value in configuration: {0}")]
    NonFinite(String),
    #[error("Hankel function requires a positive argument, got {0}")]
    NonPositiveArgument(f64),
    #[error("spectral variable sits on the branch point |K| = k (K = {0})")]
    BranchPoint(f64),
    #[error("point-defect matrix A is singular (spectral singularity), |det| = {0:.3e}")]
    SingularA(f64),
    #[error("line-defect matrix B(K) is singular at K = {0} (spectral singularity)")]
    SingularB(f64),
    #[error("quadrature did not converge within {0} evaluations (err estimate {1:.3e})")]
    NoConvergence(usize, f64),
    #[error("Green's function evaluated at coincident points")]
    CoincidentPoints,
    #[error("grazing incidence: |cos theta_in| = {0:.3e} below 1e-6")]
    GrazingIncidence(f64),
    #[error("dense integral-equation system is singular")]
    SingularSystem,
    #[error("grid too coarse: h*k = {0:.3} exceeds 0.2")]
    ResolutionTooCoarse(f64),
    #[error("surface height is not flat on the support boundary (|grad h| = {0:.3e})")]
    NonFlatBoundary(f64),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, ScatterError>;
