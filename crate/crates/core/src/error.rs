use thiserror::Error;

use crate::designer::UnconstrainedSolution;

/// Errors raised by the simulator.
///
/// Variants map onto the failure classes the command line reports with
/// distinct exit codes.
#[derive(Debug, Error)]
pub enum FransonError {
    /// An input was outside the domain of a physical quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration that cannot describe a valid experiment.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Malformed or unusable tabulated data.
    #[error("data error: {0}")]
    Data(String),

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The fiber design problem has no physical (non-negative) solution.
    #[error("infeasible design: {reason}")]
    Infeasible {
        reason: String,
        unconstrained: Option<UnconstrainedSolution>,
    },

    /// Not enough counts to form an estimate.
    #[error("statistics error: {0}")]
    Statistics(String),

    /// Structured-text parse failure; the message carries line information.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, FransonError>;
