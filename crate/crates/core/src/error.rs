use thiserror::Error;

/// Errors raised by the model, bound and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates one of the model invariants.
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    /// The arcsin map received an argument outside [-1, 1].
    #[error("peak frequency {freq_hz} Hz maps to arcsin argument {argument}, outside [-1, 1]")]
    Range { freq_hz: f64, argument: f64 },

    /// The frequency-to-angle map is degenerate for this configuration.
    #[error("degenerate angle map: {0}")]
    Degenerate(String),

    /// Successive quadrature refinements never agreed to the requested tolerance.
    #[error("quadrature did not converge after {bins} bins (relative change {change:e}, tolerance {tol:e})")]
    NotConverged { bins: usize, change: f64, tol: f64 },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
