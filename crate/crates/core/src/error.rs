use thiserror::Error;

/// Every failure mode of the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaserError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("degenerate rate: {0}")]
    DegenerateRate(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Newton iterate collapsed onto the trivial branch")]
    CollapsedToTrivial,

    #[error("nonphysical root (omega = {omega:.6e})")]
    NonphysicalRoot { omega: f64 },

    #[error("no lasing threshold with z_th <= 1/2 (minimal candidate {min_candidate:?})")]
    NoThreshold { min_candidate: Option<f64> },

    #[error("sweep grids do not match: {0}")]
    GridMismatch(String),

    #[error("numerical blow-up at t = {time:.4e} (component magnitude {magnitude:.3e})")]
    NumericalBlowup { time: f64, magnitude: f64 },

    #[error("envelope still drifting at t_max = {t_max:.4e} (drift {drift:.3e})")]
    NoRelaxation { t_max: f64, drift: f64 },

    #[error("relaxed state rotates against the frame: suggested omega {suggested_omega:.9} (frame {frame_omega:.9})")]
    FrameMismatch {
        frame_omega: f64,
        suggested_omega: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, LaserError>;
