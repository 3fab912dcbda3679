use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("N = {n} exceeds the capacity of dense diagonalization (N <= {max})")]
    CapacityExceeded { n: usize, max: usize },

    #[error("<S^2> = {value} is not within {tol:e} of any S(S+1)")]
    DegeneracyAmbiguity { value: f64, tol: f64 },

    #[error("ordering violation: {0}")]
    OrderingViolation(String),

    #[error("oracle residual {residual:e} exceeds tolerance {tol:e}")]
    OracleMismatch { residual: f64, tol: f64 },

    #[error("quadrature not converged: doubling the nodes changed the result by {delta:e} (tolerance {tol:e})")]
    Convergence { delta: f64, tol: f64 },

    #[error("distribution integrates to {integral} (tolerance {tol:e})")]
    Normalization { integral: f64, tol: f64 },

    #[error("overlap modulus {modulus:e} on loop link {link} is below 1e-12")]
    VanishingOverlap { link: usize, modulus: f64 },

    #[error("usage: {0}")]
    Usage(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 usage/validation, 3 capacity, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::Domain(_) | Error::Usage(_) => 2,
            Error::CapacityExceeded { .. } => 3,
            Error::DegeneracyAmbiguity { .. }
            | Error::OrderingViolation(_)
            | Error::OracleMismatch { .. }
            | Error::Convergence { .. }
            | Error::Normalization { .. }
            | Error::VanishingOverlap { .. } => 4,
            Error::Io(_) => 1,
        }
    }

    /// Short machine-readable category tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid-config",
            Error::Domain(_) => "domain",
            Error::Usage(_) => "usage",
            Error::CapacityExceeded { .. } => "capacity",
            Error::DegeneracyAmbiguity { .. } => "degeneracy-ambiguity",
            Error::OrderingViolation(_) => "ordering-violation",
            Error::OracleMismatch { .. } => "oracle-mismatch",
            Error::Convergence { .. } => "convergence",
            Error::Normalization { .. } => "normalization",
            Error::VanishingOverlap { .. } => "vanishing-overlap",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
