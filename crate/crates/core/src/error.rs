use thiserror::Error;

/// Errors raised by the detection and efficiency routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    /// A function evaluation produced NaN or an infinity.
    #[error("non-finite value {value} evaluating {op} at {abscissa}")]
    NonFinite {
        op: &'static str,
        abscissa: f64,
        value: f64,
    },

    #[error("no nonzero derivative up to order {max_order}")]
    NoNonzeroDerivative { max_order: u32 },

    /// ARE is only defined between detectors sharing the derivative order.
    #[error("incomparable orders: nu_a = {nu_a}, nu_b = {nu_b}")]
    IncomparableOrders { nu_a: u32, nu_b: u32 },

    #[error("efficacy of {detector} is not stable in N: {detail}")]
    EfficacyUnstable { detector: String, detail: String },

    /// The sample-size search hit its upper bound without reaching the target.
    #[error("n_max exceeded: detection probability at n_max = {n_max} is {pd_at_n_max}")]
    NMaxExceeded { n_max: u64, pd_at_n_max: f64 },
}

impl Error {
    /// Name of the operation that raised the error, where one is recorded.
    pub fn operation(&self) -> Option<&'static str> {
        match self {
            Error::Domain { op, .. } | Error::NonFinite { op, .. } => Some(op),
            Error::NoNonzeroDerivative { .. } | Error::EfficacyUnstable { .. } => Some("efficacy"),
            Error::IncomparableOrders { .. } => Some("are"),
            Error::NMaxExceeded { .. } => Some("required_sample_size"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        op,
        reason: reason.into(),
    }
}
