use thiserror::Error;

/// Errors shared by all solver and evaluation modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {what}: {why}")]
    Domain { what: &'static str, why: String },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invariant violated in {what}: {why}")]
    Invariant { what: &'static str, why: String },

    #[error("energy overflow: {0}")]
    EnergyOverflow(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    pub fn domain(what: &'static str, why: impl Into<String>) -> Self {
        Error::Domain {
            what,
            why: why.into(),
        }
    }

    pub fn invariant(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invariant {
            what,
            why: why.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
