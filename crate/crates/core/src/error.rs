use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus must be an odd prime >= 3, got {0}")]
    BadModulus(u64),
    #[error("field elements over F_{0} and F_{1} cannot be combined")]
    ModulusMismatch(u64, u64),
    #[error("matrix is singular (determinant 0 mod {0})")]
    Singular(u64),
    #[error("census prime {p} exceeds the enumeration bound {bound}")]
    CensusBound { p: u64, bound: u64 },
    #[error("closed form mismatch for {what}: enumeration gives {counted}, formula gives {formula}")]
    ClosedFormMismatch {
        what: String,
        counted: String,
        formula: String,
    },
    #[error("trace residue must be nonzero mod {0}; use the trace-zero density")]
    ZeroTrace(u64),
    #[error("coefficient a_{0} is missing from the table; extend the table past {0}")]
    MissingCoefficient(u64),
    #[error("curve has zero discriminant")]
    SingularCurve,
    #[error("level {level} is inconsistent with the curve at {ell}: {reason}")]
    ConductorMismatch {
        ell: u64,
        level: u64,
        reason: &'static str,
    },
    #[error("p = {p} divides the level {level}")]
    PDividesLevel { p: u64, level: u64 },
    #[error("local factor at ell = p = {0} is undefined")]
    EllEqualsP(u64),
    #[error("transfer gives negative lambda ({0}); input data is inconsistent")]
    NegativeLambda(i64),
    #[error("Hyp mu fails: mu(g) = {0}, but every transfer computation requires mu(g) = 0")]
    MuNonZero(u64),
    #[error("local factor lists cover different primes")]
    FactorPrimeMismatch,
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Failures that mean "the mathematics said no" rather than "the input
    /// could not be read".
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ClosedFormMismatch { .. }
                | Error::HypothesisViolation(_)
                | Error::MuNonZero(_)
                | Error::NegativeLambda(_)
                | Error::FactorPrimeMismatch
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
