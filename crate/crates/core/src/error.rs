use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("invalid weight scheme: {0}")]
    InvalidScheme(String),
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("weights sum to zero (|sum| = {sum_abs:e}, sum of moduli = {abs_sum:e})")]
    DegenerateWeights { sum_abs: f64, abs_sum: f64 },
    #[error("evaluation point lies within {distance:e} of root {index}")]
    PoleProximity { index: usize, distance: f64 },
    #[error("degree {degree} exceeds the cap of {cap}")]
    DegreeTooLarge { degree: usize, cap: usize },
    #[error("derivative order {k} must satisfy 1 <= k < {degree}")]
    OrderTooLarge { k: usize, degree: usize },
    #[error("power {p} outside 1..={cap}")]
    PTooLarge { p: usize, cap: usize },
    #[error("matrix size {n} exceeds the cap of {cap}")]
    SizeTooLarge { n: usize, cap: usize },
    #[error("combined support of {atoms} atoms exceeds the cap of {cap}")]
    SupportTooLarge { atoms: usize, cap: usize },
    #[error("eigenvalue iteration failed: {0}")]
    EigenFailure(String),
    #[error("refined zeros have defect {defect:e} above tolerance {tol:e}")]
    RefinementFailure { defect: f64, tol: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    /// Usage-class errors as opposed to numerical failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidLaw(_)
                | Error::InvalidScheme(_)
                | Error::Parse(_)
                | Error::Config(_)
                | Error::InvalidArgument(_)
                | Error::InvalidMeasure(_)
                | Error::OrderTooLarge { .. }
                | Error::PTooLarge { .. }
                | Error::SizeTooLarge { .. }
                | Error::SupportTooLarge { .. }
        )
    }
}
