use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}: argument {value} outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error(
        "degenerate self-consistency problem: slope is zero, critical temperature is infinite"
    )]
    DegenerateSlope,
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("resource guard: {0}")]
    Resource(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("no sign change in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        what,
        value,
        domain,
    }
}

pub(crate) fn smooth_required() -> Error {
    Error::Unsupported("requires continuously differentiable concave A".into())
}
