use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error(
        "weight ({i},{j}) evaluates to {value} at t = {t}; weights must be finite and nonnegative"
    )]
    InvalidWeight {
        i: usize,
        j: usize,
        t: f64,
        value: f64,
    },
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("eigenvalue gap {gap:.3e} is below {tol:.3e} on a time-varying family; the closed-form solver refuses near crossings, use the Trotter path")]
    DegenerateSpectrum { gap: f64, tol: f64 },
    #[error("commutation defect {defect:.3e} exceeds {tol:.3e}; the family is not commuting")]
    NonCommutingFamily { defect: f64, tol: f64 },
    #[error("the vertex boundary of the region is empty at t = {t}")]
    EmptyBoundary { t: f64 },
    #[error("zero denominator: the quotient mass vanishes on the admissible space")]
    ZeroDenominator,
    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Refusals are numerical guards (exit code 2 at the CLI), as opposed to
    /// input validation failures (exit code 1).
    pub fn is_numerical_refusal(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSpectrum { .. } | Error::NonCommutingFamily { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
