use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("singular configuration: {0}")]
    Singular(&'static str),

    #[error("transmission {0} lies outside [0, 1] beyond round-off")]
    TransmissionOutOfRange(f64),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("information diverges: {0}")]
    Divergent(&'static str),

    #[error("parameter is not identifiable from the mean photon count at this operating point")]
    NonIdentifiable,

    #[error("correlated phase-loss bound is undefined at eta = {0}")]
    BoundUndefined(f64),

    #[error("no sign change of the target function in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("mean count model is not monotone over [{lo}, {hi}]")]
    NonMonotone { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check(
    ok: bool,
    name: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
