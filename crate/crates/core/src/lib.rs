//! Estimation of the transition probabilities of a two-state slotted
//! channel from non-consecutive observations.
//!
//! A channel alternates between *occupied* (`0`) and *idle* (`1`) slots as a
//! Markov chain with `alpha = P(idle | occupied)` and
//! `beta = P(occupied | idle)`. An observer that senses only some slots sees
//! gaps of hidden slots between observations; [`em::run_em`] recovers
//! `(alpha, beta)` from such data by expectation-maximization with an exact
//! Markov-bridge E-step.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is deliberate: NaN takes the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod em;
mod error;
pub mod likelihood;
pub mod markov;
mod matrix;
pub mod observation;
pub mod seed;
pub mod stats;

pub use em::{
    e_step, heuristic_starts, m_step, multi_start, relative_error, run_em, EmConfig, EmTrajectory,
    EstimateReport, MultiStartResult, TrajectoryStep,
};
pub use error::{Error, Result};
pub use likelihood::{
    brute_force_likelihood, incomplete_log_likelihood, n_step_matrix, squared_error_db,
    NStepMatrix, SeScale, SE_FLOOR_DB,
};
pub use markov::{
    rank_channels, simulate_chain, transition_matrix, utilization, ChannelParams, SlotState,
    StateSequence, TransitionMatrix,
};
pub use observation::{gaps, observe, Gap, GapTable, ObservationSchedule, ObservedDataset};
pub use stats::{
    complete_log_likelihood, count_statistics, from_natural, log_partition, mle_complete,
    to_natural, NaturalParams, SufficientStats,
};
