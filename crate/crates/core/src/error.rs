use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GombocError>;

#[derive(Debug, Error)]
pub enum GombocError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid phase function: {0}")]
    InvalidPhase(String),

    #[error("angle out of range: theta={theta}, phi={phi}")]
    InvalidAngle { theta: f64, phi: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The perturbation is so small that the surface is a sphere and every point is critical.
    #[error("degenerate shape: beta={beta:e} is below {threshold:e}, every surface point is an equilibrium")]
    Degenerate { beta: f64, threshold: f64 },

    #[error("newton refinement from (theta={theta}, phi={phi}) did not converge after {iterations} iterations (|G|={residual:e})")]
    NoConvergence {
        theta: f64,
        phi: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("equilibrium index sum is {index_sum}, expected 2 (scan {n_theta}x{n_phi})")]
    IndexViolation {
        index_sum: i64,
        n_theta: usize,
        n_phi: usize,
    },

    #[error("bad bracket [{lo}, {hi}]: convex(lo)={lo_convex}, convex(hi)={hi_convex}")]
    BadBracket {
        lo: f64,
        hi: f64,
        lo_convex: bool,
        hi_convex: bool,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed file: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl GombocError {
    /// True for failures of the numerical machinery itself, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            GombocError::Degenerate { .. }
                | GombocError::NoConvergence { .. }
                | GombocError::IndexViolation { .. }
        )
    }
}
