//! Exit-code contract: 0 success, 1 check failure, 2 invalid input,
//! 3 uncovered regime, 4 numerical failure.

use std::fmt;

use serrin_core::model::ProblemCase;
use serrin_core::Error;

pub const OK: u8 = 0;
pub const CHECK_FAILED: u8 = 1;
pub const INVALID_INPUT: u8 = 2;
pub const UNCOVERED: u8 = 3;
pub const NUMERICAL: u8 = 4;

/// A problem with the command line or the config document itself.
#[derive(Debug)]
pub struct UsageError(String);

impl UsageError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn core_code(e: &Error) -> u8 {
    match e {
        Error::UnsupportedRegime {
            case: ProblemCase::DecreasingUncovered,
            ..
        } => UNCOVERED,
        Error::InvalidInput(_)
        | Error::Domain(_)
        | Error::InvalidDomain(_)
        | Error::Format(_)
        | Error::Io(_)
        | Error::UnsupportedRegime { .. } => INVALID_INPUT,
        Error::DegenerateArgument(_)
        | Error::NoRoot(_)
        | Error::OutOfRange { .. }
        | Error::Singular { .. }
        | Error::SolverFailure { .. }
        | Error::InconsistentModel(_)
        | Error::NotApplicable(_) => NUMERICAL,
    }
}

/// The first recognised cause decides; anything else is treated as invalid input.
pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return core_code(e);
        }
        if cause.is::<UsageError>()
            || cause.is::<serde_json::Error>()
            || cause.is::<std::io::Error>()
        {
            return INVALID_INPUT;
        }
    }
    INVALID_INPUT
}
