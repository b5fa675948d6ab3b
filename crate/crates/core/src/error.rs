use thiserror::Error;

/// Errors produced by the propagator pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("trajectory became non-finite at step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },

    #[error(
        "root search did not converge after {iters} iterations: \
         best D = {best_distance:e} at guess ({best_x1}, {best_p1})"
    )]
    NoConvergence {
        iters: usize,
        best_distance: f64,
        best_x1: f64,
        best_p1: f64,
    },

    #[error("caustic: |d2S| = {magnitude:e} is below the threshold {threshold:e}")]
    Caustic { magnitude: f64, threshold: f64 },

    #[error("phase jumps by {jump} rad between sweep points {index} and {next}", next = .index + 1)]
    Discontinuity { index: usize, jump: f64 },

    #[error("degenerate input to quadrant phase: (0, 0) has no argument")]
    DegenerateInput,

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("coherent width b = {b} does not match the oscillator width {expected} for this frequency")]
    WidthMismatch { b: f64, expected: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
