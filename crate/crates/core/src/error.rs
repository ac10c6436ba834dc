use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid model or run configuration; the message names the offending entry.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A numerical breakdown inside a sampler or recursion.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An iterative routine ran out of budget; `estimate` is the best value reached.
    #[error("accuracy error: {message} (best estimate {estimate}, error bound {error_bound})")]
    Accuracy {
        message: String,
        estimate: f64,
        error_bound: f64,
    },

    /// Internal invariant violated; indicates a bug upstream of the check.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

macro_rules! domain_err {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
pub(crate) use domain_err;
