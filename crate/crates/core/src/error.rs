use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    /// An enumeration or LP would exceed a configured cap.
    #[error("capacity exceeded: {what} needs {needed}, cap is {cap}{hint}")]
    Capacity {
        what: &'static str,
        needed: f64,
        cap: f64,
        hint: &'static str,
    },

    /// A malformed distribution, hyperedge, feasibility family or prior.
    #[error("invalid instance: {0}")]
    Invalid(String),

    /// An argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Instance or report text that failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub(crate) fn capacity(what: &'static str, needed: f64, cap: f64) -> Self {
        LabError::Capacity {
            what,
            needed,
            cap,
            hint: "",
        }
    }

    pub(crate) fn profile_capacity(needed: f64, cap: f64) -> Self {
        LabError::Capacity {
            what: "profile enumeration",
            needed,
            cap,
            hint: " (use Monte Carlo mode, e.g. --mode mc:100000)",
        }
    }

    pub fn is_capacity(&self) -> bool {
        matches!(self, LabError::Capacity { .. })
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
