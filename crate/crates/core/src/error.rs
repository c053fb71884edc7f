use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{name}` = {value}: {reason}")]
    InvalidArgument { name: &'static str, value: String, reason: &'static str },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("series did not converge after {terms} terms (last term magnitude {last_term:e})")]
    NonConvergence { terms: usize, last_term: f64 },

    #[error("Meijer-G evaluation failed: {0}")]
    MeijerG(String),

    #[error("series is outside its range of validity: neglected mass bounded by {bias_bound:e}")]
    OutsideValidity { bias_bound: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy { kind: &'static str, name: String, available: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: impl ToString, reason: &'static str) -> Self {
        Error::InvalidArgument { name, value: value.to_string(), reason }
    }

    /// True for failures of an iterative numerical method, as opposed to bad
    /// input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::MeijerG(_) | Error::OutsideValidity { .. } | Error::Numerical(_)
        )
    }
}
