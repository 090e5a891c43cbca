use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument {value} outside supported range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("coincident points in a Cauchy-type product")]
    Coincident,

    #[error("point on the imaginary axis: Re(zeta) = 0 is not admissible")]
    ImaginaryAxis,

    #[error(
        "evaluation budget exceeded: tensor dimension {dimension} needs {required} kernel evaluations, budget is {budget}"
    )]
    BudgetExceeded {
        dimension: usize,
        required: f64,
        budget: f64,
    },

    #[error("Painleve integration blew up at x = {x} (|q| = {q})")]
    BlowUp { x: f64, q: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
