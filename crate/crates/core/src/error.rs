use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An exhaustive computation would exceed its enumeration budget.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// The requested object does not exist (empty plant, unsatisfiable event, ...).
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A documented precondition of the operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),
    /// The mean-field solver never reached the constraint; the best iterate is attached.
    #[error("no feasible point: best constraint {constraint:.6e} < target {target:.6e} (cost {cost:.6e})")]
    NoFeasiblePoint {
        q: Vec<f64>,
        cost: f64,
        constraint: f64,
        target: f64,
    },
}

impl Error {
    /// Process exit status used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget(_) => 3,
            Error::Parse(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
