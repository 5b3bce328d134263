//! Sufficient statistics, the complete-data estimator and the natural
//! (log-odds) parameterization of the transition likelihood.
//!
//! The transition likelihood factors into two Bernoulli families, one per
//! source state:
//!
//! ```text
//! log p(x | θ) = t01·η1 − n0·A(η1) + t10·η2 − n1·A(η2)
//! η = log(p / (1 − p)),   A(η) = log(1 + e^η),   A'(η) = p
//! ```
//!
//! The first-slot factor is not part of the likelihood; every estimator in
//! this crate conditions on the first observed state.

use crate::error::{Error, Result};
use crate::markov::{ChannelParams, SlotState, StateSequence};

/// Transition counts of a slot sequence.
///
/// Integral for complete data, real-valued expectations in the E-step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SufficientStats {
    /// Transitions occupied -> idle.
    pub t01: f64,
    /// Transitions idle -> occupied.
    pub t10: f64,
    /// Transitions leaving the occupied state.
    pub n0: f64,
    /// Transitions leaving the idle state.
    pub n1: f64,
}

impl SufficientStats {
    pub fn new(t01: f64, t10: f64, n0: f64, n1: f64) -> Self {
        SufficientStats { t01, t10, n0, n1 }
    }

    /// `n0 + n1`, the number of transitions covered.
    pub fn transitions(&self) -> f64 {
        self.n0 + self.n1
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &SufficientStats) -> f64 {
        [
            self.t01 - other.t01,
            self.t10 - other.t10,
            self.n0 - other.n0,
            self.n1 - other.n1,
        ]
        .iter()
        .fold(0.0_f64, |m, d| m.max(libm::fabs(*d)))
    }
}

pub fn count_statistics(sequence: &StateSequence) -> Result<SufficientStats> {
    let states = sequence.states();
    if states.len() < 2 {
        return Err(Error::TooShortSequence {
            len: states.len(),
            min: 2,
        });
    }
    let (mut t01, mut t10, mut n0, mut n1) = (0u64, 0u64, 0u64, 0u64);
    for pair in states.windows(2) {
        match (pair[0], pair[1]) {
            (SlotState::Occupied, next) => {
                n0 += 1;
                t01 += u64::from(next == SlotState::Idle);
            }
            (SlotState::Idle, next) => {
                n1 += 1;
                t10 += u64::from(next == SlotState::Occupied);
            }
        }
    }
    Ok(SufficientStats::new(t01 as f64, t10 as f64, n0 as f64, n1 as f64))
}

/// Complete-data maximum likelihood estimate `(t01/n0, t10/n1)`.
///
/// Boundary estimates (0 or 1) are returned as is.
pub fn mle_complete(stats: &SufficientStats) -> Result<ChannelParams> {
    if !(stats.n0 > 0.0) {
        return Err(Error::InsufficientData { state: 0 });
    }
    if !(stats.n1 > 0.0) {
        return Err(Error::InsufficientData { state: 1 });
    }
    ChannelParams::new(
        (stats.t01 / stats.n0).clamp(0.0, 1.0),
        (stats.t10 / stats.n1).clamp(0.0, 1.0),
    )
}

/// Log-odds coordinates `(η1, η2)` of `(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaturalParams {
    pub eta1: f64,
    pub eta2: f64,
}

pub fn to_natural(params: ChannelParams) -> Result<NaturalParams> {
    params.require_interior()?;
    Ok(NaturalParams {
        eta1: logit(params.alpha()),
        eta2: logit(params.beta()),
    })
}

pub fn from_natural(nat: NaturalParams) -> ChannelParams {
    // sigmoid of a finite or infinite real is always in [0, 1]
    ChannelParams::new(sigmoid(nat.eta1), sigmoid(nat.eta2))
        .expect("sigmoid output lies in [0, 1]")
}

/// `(A(η1), A(η2))` with `A(η) = log(1 + e^η)`.
pub fn log_partition(nat: NaturalParams) -> (f64, f64) {
    (softplus(nat.eta1), softplus(nat.eta2))
}

/// Transition log-likelihood in conventional form.
pub fn complete_log_likelihood(stats: &SufficientStats, params: ChannelParams) -> Result<f64> {
    params.require_interior()?;
    let (a, b) = (params.alpha(), params.beta());
    Ok(stats.t01 * libm::log(a)
        + (stats.n0 - stats.t01) * libm::log1p(-a)
        + stats.t10 * libm::log(b)
        + (stats.n1 - stats.t10) * libm::log1p(-b))
}

/// Transition log-likelihood in natural form, `η·S − n·A(η)` per family.
pub fn complete_log_likelihood_natural(stats: &SufficientStats, nat: NaturalParams) -> f64 {
    let (a1, a2) = log_partition(nat);
    nat.eta1 * stats.t01 - stats.n0 * a1 + nat.eta2 * stats.t10 - stats.n1 * a2
}

#[inline]
fn logit(p: f64) -> f64 {
    libm::log(p) - libm::log1p(-p)
}

#[inline]
fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + libm::exp(-eta))
    } else {
        let e = libm::exp(eta);
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + libm::log1p(libm::exp(-eta))
    } else {
        libm::log1p(libm::exp(eta))
    }
}
