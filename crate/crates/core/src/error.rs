use alloc::string::String;
use core::fmt;

use crate::matrix3::StateVec3;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    Domain(&'static str),
    /// A system parameter violates the invariants of its family.
    InvalidSystem(&'static str),
    /// The adaptive stepper could not continue; `state` is the last accepted
    /// point of the reference trajectory.
    IntegrationFailure {
        t: f64,
        state: StateVec3,
        reason: &'static str,
    },
    /// No closed orbit was found within the search horizon.
    NotPeriodic {
        horizon: f64,
        crossings: usize,
    },
    UnknownCase(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::InvalidSystem(msg) => write!(f, "invalid system: {msg}"),
            Error::IntegrationFailure { t, state, reason } => write!(
                f,
                "integration failed at t = {t}: {reason} (last state {}, {}, {})",
                state.x(),
                state.y(),
                state.z()
            ),
            Error::NotPeriodic { horizon, crossings } => {
                write!(f, "no closed orbit within {horizon} time units ({crossings} section crossings)")
            }
            Error::UnknownCase(id) => write!(f, "unknown case id `{id}`"),
        }
    }
}

impl core::error::Error for Error {}
