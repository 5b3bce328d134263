//! The two-state slotted channel: parameters, transition matrix, simulation,
//! utilization and channel ranking.
//!
//! State `0` is *occupied*, state `1` is *idle*. `alpha` is the probability
//! of leaving the occupied state, `beta` the probability of leaving the idle
//! state.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::matrix::Mat2;

/// Random generator behind every seeded draw in this crate.
///
/// ChaCha with 8 rounds from `rand_chacha` 0.3, seeded through
/// `SeedableRng::seed_from_u64`. Output streams are stable across releases
/// of that crate line, which keeps golden files reproducible.
pub type SeededRng = rand_chacha::ChaCha8Rng;

pub(crate) fn seeded_rng(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Transition probabilities `(alpha, beta)` of a two-state channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    alpha: f64,
    beta: f64,
}

impl ChannelParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_probability("alpha", alpha)?;
        check_probability("beta", beta)?;
        Ok(ChannelParams { alpha, beta })
    }

    /// P(idle at t | occupied at t-1).
    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// P(occupied at t | idle at t-1).
    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Both parameters strictly inside `(0, 1)`.
    pub fn is_interior(&self) -> bool {
        self.alpha > 0.0 && self.alpha < 1.0 && self.beta > 0.0 && self.beta < 1.0
    }

    pub(crate) fn require_interior(&self) -> Result<()> {
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::BoundaryParameter { name, value });
            }
        }
        Ok(())
    }

    /// Projects both parameters into `[eps, 1 - eps]`.
    pub fn clamped(&self, eps: f64) -> ChannelParams {
        ChannelParams {
            alpha: self.alpha.clamp(eps, 1.0 - eps),
            beta: self.beta.clamp(eps, 1.0 - eps),
        }
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &ChannelParams) -> f64 {
        libm::fabs(self.alpha - other.alpha).max(libm::fabs(self.beta - other.beta))
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

/// Channel state in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum SlotState {
    Occupied = 0,
    Idle = 1,
}

impl SlotState {
    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn bit(self) -> u8 {
        self as u8
    }

    pub fn from_bit(bit: u64) -> Result<Self> {
        match bit {
            0 => Ok(SlotState::Occupied),
            1 => Ok(SlotState::Idle),
            other => Err(Error::InvalidState(other)),
        }
    }

    #[inline]
    pub(crate) fn from_index(i: usize) -> Self {
        if i == 0 {
            SlotState::Occupied
        } else {
            SlotState::Idle
        }
    }
}

/// A complete slot sequence `x_1 .. x_T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSequence {
    states: Vec<SlotState>,
}

impl StateSequence {
    pub fn new(states: Vec<SlotState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::TooShortSequence { len: 0, min: 1 });
        }
        Ok(StateSequence { states })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let states = bits
            .iter()
            .map(|&b| SlotState::from_bit(u64::from(b)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(states)
    }

    pub fn states(&self) -> &[SlotState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn into_states(self) -> Vec<SlotState> {
        self.states
    }
}

/// Row-stochastic 2x2 matrix; row `i` is the law of the next state given `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix(pub(crate) Mat2);

impl TransitionMatrix {
    #[inline]
    pub fn get(&self, from: SlotState, to: SlotState) -> f64 {
        self.0[from.index()][to.index()]
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.0
    }
}

pub fn transition_matrix(params: ChannelParams) -> TransitionMatrix {
    let (a, b) = (params.alpha, params.beta);
    TransitionMatrix([[1.0 - a, a], [b, 1.0 - b]])
}

/// Stationary probability of the occupied state, `beta / (alpha + beta)`.
pub fn utilization(params: ChannelParams) -> Result<f64> {
    let total = params.alpha + params.beta;
    if total <= 0.0 {
        return Err(Error::DegenerateParameters);
    }
    Ok(params.beta / total)
}

/// Draws a slot sequence of `length` slots.
///
/// Without `initial`, the first state is drawn from the stationary law.
pub fn simulate_chain(
    params: ChannelParams,
    length: usize,
    seed: u64,
    initial: Option<SlotState>,
) -> Result<StateSequence> {
    if length == 0 {
        return Err(Error::TooShortSequence { len: 0, min: 1 });
    }
    let mut rng = seeded_rng(seed);
    let first = match initial {
        Some(state) => state,
        None => {
            let u = utilization(params)?;
            if rng.gen::<f64>() < u {
                SlotState::Occupied
            } else {
                SlotState::Idle
            }
        }
    };
    let mut states = Vec::with_capacity(length);
    states.push(first);
    let mut current = first;
    for _ in 1..length {
        let leave = match current {
            SlotState::Occupied => params.alpha,
            SlotState::Idle => params.beta,
        };
        if rng.gen::<f64>() < leave {
            current = match current {
                SlotState::Occupied => SlotState::Idle,
                SlotState::Idle => SlotState::Occupied,
            };
        }
        states.push(current);
    }
    Ok(StateSequence { states })
}

/// Channel indices ordered from most idle (lowest utilization) to busiest.
/// Equal utilizations keep their input order.
pub fn rank_channels(params_list: &[ChannelParams]) -> Result<Vec<usize>> {
    let utils = params_list
        .iter()
        .map(|p| utilization(*p))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_by_utilization(&utils))
}

/// Ascending sort of indices by utilization, stable on ties.
pub fn rank_by_utilization(utils: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..utils.len()).collect();
    order.sort_by(|&i, &j| {
        utils[i]
            .partial_cmp(&utils[j])
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> ChannelParams {
        ChannelParams::new(a, b).unwrap()
    }

    #[test]
    fn transition_matrix_examples() {
        assert_eq!(transition_matrix(p(0.8, 0.3)).rows(), [[1.0 - 0.8, 0.8], [0.3, 0.7]]);
        assert_eq!(transition_matrix(p(0.0, 0.0)).rows(), [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(transition_matrix(p(1.0, 1.0)).rows(), [[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(
            ChannelParams::new(1.2, 0.1),
            Err(Error::InvalidProbability { name: "alpha", .. })
        ));
        assert!(ChannelParams::new(0.1, f64::NAN).is_err());
        assert!(ChannelParams::new(-0.0, 1.0).is_ok());
    }

    #[test]
    fn utilization_examples() {
        assert!((utilization(p(0.8, 0.3)).unwrap() - 0.3 / 1.1).abs() < 1e-15);
        assert_eq!(utilization(p(0.5, 0.5)).unwrap(), 0.5);
        assert!((utilization(p(0.2, 0.9)).unwrap() - 0.9 / 1.1).abs() < 1e-15);
        assert_eq!(utilization(p(0.0, 0.0)), Err(Error::DegenerateParameters));
    }

    #[test]
    fn simulate_deterministic_chains() {
        let alt = simulate_chain(p(1.0, 1.0), 5, 7, Some(SlotState::Occupied)).unwrap();
        assert_eq!(alt, StateSequence::from_bits(&[0, 1, 0, 1, 0]).unwrap());
        let absorbed = simulate_chain(p(0.0, 0.0), 4, 7, Some(SlotState::Idle)).unwrap();
        assert_eq!(absorbed, StateSequence::from_bits(&[1, 1, 1, 1]).unwrap());
        assert_eq!(
            simulate_chain(p(0.0, 0.0), 4, 7, None),
            Err(Error::DegenerateParameters)
        );
        assert!(simulate_chain(p(0.5, 0.5), 0, 7, None).is_err());
    }

    #[test]
    fn rank_examples() {
        let fig5 = [
            p(0.8, 0.3),
            p(0.2, 0.9),
            p(0.4, 0.1),
            p(0.7, 0.5),
            p(0.9, 0.6),
        ];
        assert_eq!(rank_channels(&fig5).unwrap(), [2, 0, 4, 3, 1]);
        assert_eq!(rank_channels(&[p(0.3, 0.3)]).unwrap(), [0]);
        assert_eq!(rank_channels(&[p(0.4, 0.2), p(0.8, 0.4)]).unwrap(), [0, 1]);
        assert!(rank_channels(&[p(0.4, 0.2), p(0.0, 0.0)]).is_err());
    }
}
