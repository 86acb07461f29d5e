use thiserror::Error;

use crate::model::ProblemCase;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Evaluation outside the domain of a closed-form expression (e.g. `r <= 0`).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate argument: {0}")]
    DegenerateArgument(String),

    #[error("unsupported regime ({case}): {reason}")]
    UnsupportedRegime { case: ProblemCase, reason: String },

    #[error("no root of the compatibility function: {0}")]
    NoRoot(String),

    #[error("value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("singular evaluation at psi = {psi} (|M - psi^2| = {gap:e}){}", location_suffix(.location))]
    Singular {
        psi: f64,
        gap: f64,
        location: Option<(usize, usize)>,
    },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("linear solver failed: {reason} (residual history: {residual_history:?})")]
    SolverFailure {
        reason: String,
        residual_history: Vec<f64>,
    },

    #[error("field inconsistent with model: {0}")]
    InconsistentModel(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn location_suffix(loc: &Option<(usize, usize)>) -> String {
    match loc {
        Some((i, j)) => format!(" at node (s={i}, theta={j})"),
        None => String::new(),
    }
}
