//! Incomplete-data likelihood `p(y | θ)`.
//!
//! Given the first observed state, the observations form a Markov chain whose
//! step across a gap of `g` hidden slots is the `(g + 1)`-step transition
//! matrix, so `log p(y | θ) = Σ_gaps log [P^(g+1)]_{start, end}`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::markov::{transition_matrix, ChannelParams, SlotState};
use crate::matrix::{self, Mat2, IDENTITY};
use crate::observation::{GapTable, ObservedDataset};

/// Reported in place of `-inf` when the squared difference is zero.
pub const SE_FLOOR_DB: f64 = -320.0;

/// Largest number of hidden slots [`brute_force_likelihood`] will enumerate.
pub const ENUMERATION_LIMIT: u64 = 20;

/// `P^n` for a channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NStepMatrix {
    n: u64,
    p: Mat2,
}

impl NStepMatrix {
    pub fn steps(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn get(&self, from: SlotState, to: SlotState) -> f64 {
        self.p[from.index()][to.index()]
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.p
    }
}

/// `P^n` by repeated multiplication, renormalizing rows after every step.
/// `n = 0` yields the identity.
pub fn n_step_matrix(params: ChannelParams, n: u64) -> NStepMatrix {
    let step = transition_matrix(params).0;
    let mut p = IDENTITY;
    for _ in 0..n {
        p = matrix::mul(&p, &step);
        matrix::renormalize(&mut p);
    }
    NStepMatrix { n, p }
}

/// Powers `P^0 ..= P^max` of one transition matrix.
///
/// Built once per parameter value and shared read-only across all gaps.
#[derive(Debug, Clone)]
pub struct PowerTable {
    powers: Vec<Mat2>,
}

impl PowerTable {
    pub fn new(params: ChannelParams, max_power: u64) -> Self {
        let step = transition_matrix(params).0;
        let mut powers = vec![IDENTITY];
        powers.reserve(max_power as usize);
        let mut p = IDENTITY;
        for _ in 0..max_power {
            p = matrix::mul(&p, &step);
            matrix::renormalize(&mut p);
            powers.push(p);
        }
        PowerTable { powers }
    }

    #[inline]
    pub(crate) fn power(&self, n: u64) -> &Mat2 {
        &self.powers[n as usize]
    }

    pub fn max_power(&self) -> u64 {
        (self.powers.len() - 1) as u64
    }

    #[inline]
    pub fn entry(&self, n: u64, from: SlotState, to: SlotState) -> f64 {
        self.powers[n as usize][from.index()][to.index()]
    }
}

/// `log p(y | θ)` conditioned on the first observed state.
pub fn incomplete_log_likelihood(dataset: &ObservedDataset, params: ChannelParams) -> Result<f64> {
    let table = GapTable::new(dataset)?;
    table_log_likelihood(&table, params)
}

/// [`incomplete_log_likelihood`] over a precomputed gap table.
pub fn table_log_likelihood(table: &GapTable, params: ChannelParams) -> Result<f64> {
    params.require_interior()?;
    let powers = PowerTable::new(params, table.max_hidden() + 1);
    powers_log_likelihood(table, &powers)
}

pub(crate) fn powers_log_likelihood(table: &GapTable, powers: &PowerTable) -> Result<f64> {
    let mut total = 0.0;
    for (gap, count) in table.classes() {
        let prob = powers.entry(gap.transitions(), gap.start_state, gap.end_state);
        if !(prob > 0.0) {
            return Err(Error::ZeroProbability {
                from: gap.start_state.bit(),
                to: gap.end_state.bit(),
                transitions: gap.transitions(),
            });
        }
        total += *count as f64 * libm::log(prob);
    }
    Ok(total)
}

/// `p(y | θ)` in linear scale by summing over every completion of the
/// hidden slots. Exponential in the number of hidden slots; used as an
/// independent check of the matrix-power route.
pub fn brute_force_likelihood(dataset: &ObservedDataset, params: ChannelParams) -> Result<f64> {
    if dataset.len() < 2 {
        return Err(Error::TooFewObservations(dataset.len()));
    }
    let hidden = dataset.hidden_slots();
    if hidden > ENUMERATION_LIMIT {
        return Err(Error::InstanceTooLarge {
            hidden,
            limit: ENUMERATION_LIMIT,
        });
    }
    let p = transition_matrix(params);
    let len = dataset.last_slot() as usize;
    let mut path = vec![SlotState::Occupied; len];
    let mut observed = vec![false; len];
    for (&t, &s) in dataset.times().iter().zip(dataset.states()) {
        path[(t - 1) as usize] = s;
        observed[(t - 1) as usize] = true;
    }
    let hidden_pos: Vec<usize> = (0..len).filter(|&i| !observed[i]).collect();

    let mut total = 0.0;
    for mask in 0u64..(1u64 << hidden) {
        for (bit, &pos) in hidden_pos.iter().enumerate() {
            path[pos] = SlotState::from_index(((mask >> bit) & 1) as usize);
        }
        total += path
            .windows(2)
            .map(|w| p.get(w[0], w[1]))
            .product::<f64>();
    }
    Ok(total)
}

/// Scale on which likelihood values are compared in the squared error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeScale {
    /// Geometric mean per transition, `exp(ℓ / (last_slot − 1))`.
    #[default]
    PerTransition,
    /// `p(y | θ)` itself; underflows for all but tiny datasets.
    Raw,
}

/// Likelihood value on the requested scale, from a log-likelihood.
pub fn likelihood_level(log_likelihood: f64, transitions: u64, scale: SeScale) -> f64 {
    match scale {
        SeScale::PerTransition => libm::exp(log_likelihood / transitions as f64),
        SeScale::Raw => libm::exp(log_likelihood),
    }
}

/// `10·log10(|a − b|²)`, floored at [`SE_FLOOR_DB`].
pub fn se_db_between(a: f64, b: f64) -> f64 {
    let diff = a - b;
    let sq = diff * diff;
    if sq > 0.0 {
        (10.0 * libm::log10(sq)).max(SE_FLOOR_DB)
    } else {
        SE_FLOOR_DB
    }
}

/// Squared error in dB between the likelihood of `estimate` and that of
/// `truth` on the same dataset.
pub fn squared_error_db(
    dataset: &ObservedDataset,
    estimate: ChannelParams,
    truth: ChannelParams,
    scale: SeScale,
) -> Result<f64> {
    let table = GapTable::new(dataset)?;
    table_squared_error_db(&table, estimate, truth, scale)
}

pub fn table_squared_error_db(
    table: &GapTable,
    estimate: ChannelParams,
    truth: ChannelParams,
    scale: SeScale,
) -> Result<f64> {
    let n = table.transitions();
    let est = likelihood_level(table_log_likelihood(table, estimate)?, n, scale);
    let reference = likelihood_level(table_log_likelihood(table, truth)?, n, scale);
    Ok(se_db_between(est, reference))
}
