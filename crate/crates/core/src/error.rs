use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("prior guess must be below dimensionality (p0 = {p0}, D = {dim})")]
    PriorGuessTooLarge { p0: f64, dim: usize },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("chain {chain}: log density is not finite at the initial point")]
    Initialization { chain: usize },

    #[error("root bracket failed: target {target} not reached below tau = {tau_max:e}")]
    BracketFailure { target: f64, tau_max: f64 },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("diagnostics require at least {min_chains} chains of length >= {min_len}")]
    InsufficientChains { min_chains: usize, min_len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {value}")))
    }
}
