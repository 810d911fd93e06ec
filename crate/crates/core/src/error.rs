//! Error types shared by all modules.

use thiserror::Error;

/// Broad classification used by the CLI to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: inadmissible surface, malformed configuration, out-of-range request.
    Validation,
    /// The computation itself failed: guard tripped, step collapsed, CFL violated.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    /// The surface violates sup|∇ψ| < 1 or sup|ψ| < 1.
    #[error("surface assumption violated: {0}")]
    AssumptionViolation(String),

    /// ψ takes positive values where the nonpositivity convention is required.
    #[error("surface shape violation: {0}")]
    ShapeViolation(String),

    /// inf γ fell below the configured floor; divisions by powers of γ are unsafe.
    #[error("degenerate surface: inf gamma = {min_gamma:.3e} below floor {floor:.3e}")]
    DegenerateSurface { min_gamma: f64, floor: f64 },

    /// A nonzero series balance remained at a resonant order with no log slot available.
    #[error("resonance mismatch in series matching: {0}")]
    ResonanceMismatch(String),

    /// A requested time slice touches or crosses the blow-up surface.
    #[error("slice through singularity: t = {t}, min (t - psi) = {min_t_offset:.3e}")]
    SliceThroughSingularity { t: f64, min_t_offset: f64 },

    /// Operation requires T > 0.
    #[error("singular time T = {t}; operation requires T > 0")]
    SingularTime { t: f64 },

    /// State at T = 0 is not in the null space of A.
    #[error("null-space violation at T = 0: max |A w| = {max_residual:.3e}")]
    NullSpaceViolation { max_residual: f64 },

    /// The reduced trajectory exceeded the sup-norm guard before reaching T = b.
    #[error("reduced system blow-up at T = {t:.6}: sup |w| = {sup:.3e} exceeds guard {guard:.3e}")]
    BlowupInReducedSystem { t: f64, sup: f64, guard: f64 },

    /// The step controller drove the log-time step below the collapse floor.
    #[error("step collapse: d(tau) = {tau_step:.3e} at T = {t:.6}")]
    StepCollapse { tau_step: f64, t: f64 },

    /// Dense-output sample outside the integrated range.
    #[error("sample out of range: {0}")]
    OutOfRange(String),

    /// The trajectory does not cover all per-point offsets T(x) = alpha - psi(x).
    #[error("trajectory too short: need T up to {needed:.6}, integrated to {have:.6}")]
    TrajectoryTooShort { needed: f64, have: f64 },

    /// |u| exceeded the guard at a boundary sample point; K is too close to the boundary.
    #[error("blow-up reached the boundary at t = {t:.6}")]
    BlowupReachedBoundary { t: f64 },

    /// Time step violates the CFL condition of the explicit scheme.
    #[error("CFL violation: dt = {dt:.3e} exceeds limit {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },

    /// Initial data already exceed the blow-up threshold.
    #[error("immediate overflow: sup |data| = {sup:.3e} >= U_max = {u_max:.3e}")]
    ImmediateOverflow { sup: f64, u_max: f64 },

    /// The 1/(t_b - t) fit did not describe the threshold crossings.
    #[error("blow-up time fit failure: relative residual {residual:.3e}")]
    FitFailure { residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Internal consistency check failed; indicates a bug, not bad input.
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            AssumptionViolation(_)
            | ShapeViolation(_)
            | DegenerateSurface { .. }
            | SliceThroughSingularity { .. }
            | SingularTime { .. }
            | NullSpaceViolation { .. }
            | OutOfRange(_)
            | TrajectoryTooShort { .. }
            | InvalidConfig(_) => ErrorKind::Validation,
            ResonanceMismatch(_)
            | BlowupInReducedSystem { .. }
            | StepCollapse { .. }
            | BlowupReachedBoundary { .. }
            | CflViolation { .. }
            | ImmediateOverflow { .. }
            | FitFailure { .. }
            | Internal(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
