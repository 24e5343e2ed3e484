use std::fmt;

/// Errors raised by the estimators, samplers and cache loader.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The query is well defined but lies outside the parameter window in
    /// which the asymptotic statement holds. The message names the violated
    /// condition verbatim.
    #[error("window violation: {0}")]
    Window(Condition),

    #[error("edge probability {p} outside [0, 1] for n = {n}, lambda = {lambda}")]
    Probability { n: u64, lambda: f64, p: f64 },

    #[error("cache format error at line {line}: {reason}")]
    Cache { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A violated window condition, e.g. `requires lambda <= n^(1/12)/5`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition(pub String);

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Error {
    pub(crate) fn window(condition: impl Into<String>) -> Self {
        Error::Window(Condition(condition.into()))
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    /// True for errors caused by invalid user input rather than internal failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Window(_) | Error::Probability { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Returns `Err(Error::Window)` naming `condition` unless `holds`.
pub(crate) fn require(holds: bool, condition: &str) -> Result<()> {
    if holds {
        Ok(())
    } else {
        Err(Error::window(condition))
    }
}
