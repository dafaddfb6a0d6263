use alloc::string::String;

/// Errors raised by the combinatorics, the flow solver and the evaluators.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("ground set of size {requested} exceeds the partition cap {cap}")]
    SizeLimit { requested: usize, cap: usize },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no function of arity {0} in the sequence")]
    MissingArity(usize),

    #[error("flow diverged after {steps} steps (non-finite phase state)")]
    Divergence { steps: usize },

    #[error("flow over |t| = {duration} needs {needed} steps, limit is {limit}")]
    StepLimit { duration: f64, needed: usize, limit: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
