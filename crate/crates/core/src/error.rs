use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("{name} = {value} violates the constraint {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// The weighted series does not converge for this threshold multiplier.
    #[error("series diverges at epsilon = {epsilon}: epsilon must exceed the critical value {critical}")]
    Divergent { epsilon: f64, critical: f64 },

    #[error("error bound {achieved:e} exceeds the requested tolerance {requested:e}")]
    ToleranceNotMet { achieved: f64, requested: f64 },

    #[error("tail model `{0}` is not supported by this operation")]
    UnsupportedModel(&'static str),

    /// Mass beyond the simulated n-grid is too large to be bounded away.
    #[error("beyond-grid majorant {majorant:e} exceeds the allowed {allowed:e}; extend the grid")]
    GridInsufficient { majorant: f64, allowed: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub(crate) fn ensure(ok: bool, name: &'static str, value: f64, constraint: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            constraint,
        })
    }
}
