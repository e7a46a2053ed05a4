//! Command-line front end: configuration, the experiment registry and
//! report rendering.

pub mod commands;
pub mod config;
pub mod hunt;
pub mod registry;
pub mod report;

use lurye_core::Error;

/// Malformed input: bad JSON, unknown experiment, empty range and so on.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    /// The analysis ran and came back negative.
    Negative = 1,
    Usage = 2,
}

/// Core errors that are answers rather than misuse.
pub fn is_analytic_negative(e: &Error) -> bool {
    matches!(
        e,
        Error::UnstablePlant { .. }
            | Error::NotSuitable { .. }
            | Error::NegativeDiscriminant { .. }
            | Error::NoFeasibleMultiplier
            | Error::NonfiniteState { .. }
            | Error::NoUniqueSteadyState(_)
            | Error::NotSettled
            | Error::DegenerateSeparation { .. }
    )
}

pub fn exit_for(e: &anyhow::Error) -> Exit {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(core) if is_analytic_negative(core) => Exit::Negative,
        _ => Exit::Usage,
    }
}
