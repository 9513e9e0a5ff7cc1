use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid physical or structural configuration.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// Step doubling did not converge before `max_steps`.
    #[error("integration did not converge after {steps} steps (last change {last_change:.3e}, unitarity defect {defect:.3e})")]
    Integration {
        steps: usize,
        last_change: f64,
        defect: f64,
    },

    /// Open-system integration left the physical state space.
    #[error("density-matrix integration failed: {0}")]
    Density(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("evolution is not cyclic: projector defect {defect:.3e} exceeds {threshold:.3e}")]
    NotCyclic { defect: f64, threshold: f64 },

    #[error("target is not of the form n.sigma: {0}; compose several loops instead")]
    Decomposition(String),

    #[error("entangler protocol violated: off-block mass {defect:.3e}")]
    Protocol { defect: f64 },

    #[error("target concurrence {target} is infeasible; the fixed parameters reach at most {achievable}")]
    Infeasible { target: f64, achievable: f64 },

    /// Input matrix or state failed a structural check.
    #[error("validation failed: {0}")]
    Validation(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
