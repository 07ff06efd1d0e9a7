use thiserror::Error;

/// Errors raised by the geometric and numerical pipeline.
///
/// Diagnostic payloads are carried as `f64` regardless of the working scalar.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error("zero vector has no causal character")]
    ZeroVector,

    #[error("normal plane degenerate: seed is null-parallel to n1 (|<m,n1>| = {pairing:.3e})")]
    DegeneratePlane { pairing: f64 },

    #[error("point ({u}, {v}) outside the patch domain")]
    OutOfDomain { u: f64, v: f64 },

    #[error("induced metric not positive definite (E={e:.6e}, G={g:.6e}, EG-F^2={w2:.6e})")]
    NotSpacelike { e: f64, g: f64, w2: f64 },

    #[error("mean curvature vector fails the lightlike/nonzero test (<H,H>={h_sq:.3e}, |H|={h_norm:.3e})")]
    NotMarginallyTrapped { h_sq: f64, h_norm: f64 },

    #[error("frame-equation cross-checks disagree (defect {defect:.3e} > tol {tol:.3e}); parameters are likely not principal")]
    InconsistentFrameEquations { defect: f64, tol: f64 },

    #[error("surface of degenerate type: |4nu^2+4lambda^2-1| = {margin:.3e} below tolerance")]
    DegenerateType { margin: f64 },

    #[error("gauge function varies across the other parameter (variation {variation:.3e} > tol {tol:.3e}); input is not principal or quadrature is under-resolved")]
    GaugeNotConstant { variation: f64, tol: f64 },

    #[error("row fixed point failed to converge at v-row {row} after {iterations} iterations")]
    NoConvergence { row: usize, iterations: usize },

    #[error("compatibility equations violated (residuals {res1:.3e}, {res2:.3e} > threshold {threshold:.3e}); the prescribed triple does not define a surface")]
    CompatibilityViolated { res1: f64, res2: f64, threshold: f64 },

    #[error("frame integration metric drift {drift:.3e} exceeds limit {limit:.3e}")]
    MetricDriftExceeded { drift: f64, limit: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("grid file: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GeomError>;
