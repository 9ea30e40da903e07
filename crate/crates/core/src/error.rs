use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeoError {
    #[error("metric not positive definite at ({x:.6}, {y:.6})")]
    PositivityViolation { x: f64, y: f64 },
    #[error("point ({x:.6}, {y:.6}) outside the evaluable pad")]
    DomainEscape { x: f64, y: f64 },
    #[error("gauge not injective: jacobian determinant {det:.3e} below floor")]
    GaugeNotInjective { det: f64 },
    #[error("gauge post-condition failed: residual {residual:.3e}")]
    GaugeCheck { residual: f64 },
    #[error("geodesic trapped: no exit before t = {tau_max}")]
    TrappedGeodesic { tau_max: f64 },
    #[error("boundary crossing refinement stalled")]
    StepUnderflow,
    #[error("no bracketing fan direction for boundary pair")]
    NoBracket,
    #[error("boundary distance oracle failed: {0}")]
    OracleFailure(String),
    #[error("solver stalled after {iterations} iterations (residual {residual:.3e})")]
    SolverStall { iterations: usize, residual: f64 },
    #[error("conjugate path inconsistency: loop residual {residual:.3e}")]
    PathInconsistency { residual: f64 },
    #[error("iteration stagnated at relative residual {residual:.3e}")]
    CgStagnation { residual: f64 },
    #[error("extended disk is not simple")]
    NonSimpleExtension,
    #[error("boundary distances differ by {diff:.3e}")]
    DistanceMismatch { diff: f64 },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, GeoError>;
