use thiserror::Error;

/// Errors raised by the numerical routines and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {name} = {value}: expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// The stationary point has a nonpositive rate; the user cannot be served.
    #[error("operating point has no positive rate")]
    NoPositiveRate,

    #[error("fixed-point iteration did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    /// `P * u0^2` must exceed `e` for the large-gain closed forms to apply.
    #[error("P*u0^2 = {snr} is below the large-gain regime (must exceed e)")]
    OutsideRegime { snr: f64 },

    #[error("{requested} Monte-Carlo samples requested, at least {minimum} required")]
    TooFewSamples { requested: usize, minimum: usize },

    #[error("invalid alpha distribution: {0}")]
    InvalidDistribution(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(
    ok: bool,
    name: &'static str,
    value: f64,
    expected: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected,
        })
    }
}
