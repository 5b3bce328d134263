use alloc::boxed::Box;
use alloc::vec::Vec;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("probability {name} = {value} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("alpha = beta = 0 has no unique stationary distribution")]
    DegenerateParameters,

    #[error("parameter {name} = {value} must lie strictly inside (0, 1)")]
    BoundaryParameter { name: &'static str, value: f64 },

    #[error("invalid slot state {0}, expected 0 or 1")]
    InvalidState(u64),

    #[error("sequence of length {len} is too short, need at least {min}")]
    TooShortSequence { len: usize, min: usize },

    #[error("no transitions leave state {state}, parameter is unidentifiable")]
    InsufficientData { state: u8 },

    #[error("observation schedule has an empty or zero-valued skip support")]
    InvalidSchedule,

    #[error("schedule fits {observed} observation(s) in {len} slots, need at least 2")]
    ScheduleExhaustsSequence { len: usize, observed: usize },

    #[error("dataset has {0} observation(s), need at least 2")]
    TooFewObservations(usize),

    #[error("invalid dataset: {0}")]
    InvalidDataset(&'static str),

    #[error("gap from state {from} to state {to} over {transitions} transition(s) has zero probability")]
    ZeroProbability { from: u8, to: u8, transitions: u64 },

    #[error("gap from state {from} to state {to} has zero bridge probability over {transitions} transition(s)")]
    ZeroBridge { from: u8, to: u8, transitions: u64 },

    #[error("{hidden} hidden slots exceed the enumeration bound of {limit}")]
    InstanceTooLarge { hidden: u64, limit: u64 },

    #[error("all observed states are identical")]
    DegenerateObservations,

    #[error("true parameter {name} is zero, relative error undefined")]
    ZeroTruthParameter { name: &'static str },

    #[error("at least one starting point is required")]
    NoStarts,

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),

    #[error("iteration {iteration}: {source}")]
    AtIteration { iteration: usize, source: Box<Error> },

    #[error("every start failed ({} start(s))", .0.len())]
    AllStartsFailed(Vec<(usize, Error)>),
}

impl Error {
    /// Stable identifier of the variant, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidProbability { .. } => "invalid-probability",
            Error::DegenerateParameters => "degenerate-parameters",
            Error::BoundaryParameter { .. } => "boundary-parameter",
            Error::InvalidState(_) => "invalid-state",
            Error::TooShortSequence { .. } => "too-short-sequence",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::InvalidSchedule => "invalid-schedule",
            Error::ScheduleExhaustsSequence { .. } => "schedule-exhausts-sequence",
            Error::TooFewObservations(_) => "too-few-observations",
            Error::InvalidDataset(_) => "invalid-dataset",
            Error::ZeroProbability { .. } => "zero-probability",
            Error::ZeroBridge { .. } => "zero-bridge",
            Error::InstanceTooLarge { .. } => "instance-too-large",
            Error::DegenerateObservations => "degenerate-observations",
            Error::ZeroTruthParameter { .. } => "zero-truth-parameter",
            Error::NoStarts => "no-starts",
            Error::InvalidConfig(_) => "invalid-config",
            Error::AtIteration { source, .. } => source.name(),
            Error::AllStartsFailed(_) => "all-starts-failed",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
