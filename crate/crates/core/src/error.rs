use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("level label tracking failed: {0}")]
    LabelTracking(String),

    #[error("level not found: {0}")]
    LevelNotFound(String),

    #[error("no stationary point of the transition frequency in [{lo:.6e}, {hi:.6e}] T")]
    NoStationaryPoint { lo: f64, hi: f64 },

    #[error("{what} did not converge (residual {residual:.3e})")]
    NonConvergence { what: String, residual: f64 },

    #[error("unsolvable: {0}")]
    Unsolvable(String),

    #[error("unstable chain: {axis}-axis mode {mode} has imaginary frequency (eigenvalue {eigenvalue:.3e})")]
    Instability { axis: char, mode: usize, eigenvalue: f64 },

    #[error("divergent: {0}")]
    Divergence(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("integration step underflow at t = {t:.6e} s (step {step:.3e} s, error norm {error_norm:.3e})")]
    StepUnderflow { t: f64, step: f64, error_norm: f64 },

    #[error("Fock truncation too small: {0}")]
    Truncation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_)
                | Error::LabelTracking(_)
                | Error::NoStationaryPoint { .. }
                | Error::NonConvergence { .. }
                | Error::Unsolvable(_)
                | Error::Instability { .. }
                | Error::Divergence(_)
                | Error::StepUnderflow { .. }
                | Error::Truncation(_)
        )
    }
}
