//! The secondary user's partial view of a channel: which slots get sensed,
//! and the gaps between consecutive observations.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::markov::{seeded_rng, SeededRng, SlotState, StateSequence};

/// How many slots are skipped between consecutive observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObservationSchedule {
    /// Always skip `skip` slots (`0` observes every slot).
    Fixed { skip: u64 },
    /// Skip a number of slots drawn i.i.d. uniformly from `support` before
    /// every observation.
    RandomUniform { support: Vec<u64>, seed: u64 },
}

impl ObservationSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            ObservationSchedule::Fixed { .. } => Ok(()),
            ObservationSchedule::RandomUniform { support, .. } => {
                if support.is_empty() || support.contains(&0) {
                    Err(Error::InvalidSchedule)
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Infinite stream of skip lengths, reproducible from the schedule alone.
    pub fn skips(&self) -> Result<SkipSampler<'_>> {
        self.validate()?;
        Ok(match self {
            ObservationSchedule::Fixed { skip } => SkipSampler::Fixed(*skip),
            ObservationSchedule::RandomUniform { support, seed } => SkipSampler::Uniform {
                support,
                rng: seeded_rng(*seed),
            },
        })
    }

    /// Sequence length whose last slot is exactly the `k`-th observation.
    pub fn slots_for_observations(&self, k: usize) -> Result<u64> {
        if k < 2 {
            return Err(Error::TooFewObservations(k));
        }
        let mut last = 1u64;
        for skip in self.skips()?.take(k - 1) {
            last += skip + 1;
        }
        Ok(last)
    }
}

#[allow(missing_debug_implementations, clippy::large_enum_variant)]
pub enum SkipSampler<'a> {
    Fixed(u64),
    Uniform { support: &'a [u64], rng: SeededRng },
}

impl Iterator for SkipSampler<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        Some(match self {
            SkipSampler::Fixed(skip) => *skip,
            SkipSampler::Uniform { support, rng } => support[rng.gen_range(0..support.len())],
        })
    }
}

/// Observed slots: 1-based slot indices and the states sensed there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedDataset {
    times: Vec<u64>,
    states: Vec<SlotState>,
}

impl ObservedDataset {
    pub fn new(times: Vec<u64>, states: Vec<SlotState>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::InvalidDataset("times and states differ in length"));
        }
        match times.first() {
            None => return Err(Error::TooFewObservations(0)),
            Some(&first) if first != 1 => {
                return Err(Error::InvalidDataset("first observation must be slot 1"))
            }
            _ => {}
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDataset("slot indices must be strictly increasing"));
        }
        Ok(ObservedDataset { times, states })
    }

    pub fn times(&self) -> &[u64] {
        &self.times
    }

    pub fn states(&self) -> &[SlotState] {
        &self.states
    }

    /// Number of observations `K`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Slot index of the last observation.
    pub fn last_slot(&self) -> u64 {
        *self.times.last().expect("dataset is never empty")
    }

    /// Transitions spanned from the first to the last observation.
    pub fn transitions(&self) -> u64 {
        self.last_slot() - 1
    }

    /// Total number of unobserved slots between the first and last observation.
    pub fn hidden_slots(&self) -> u64 {
        self.last_slot() - self.times.len() as u64
    }

    pub fn occupied_count(&self) -> usize {
        self.states
            .iter()
            .filter(|s| **s == SlotState::Occupied)
            .count()
    }
}

/// Unobserved stretch between two consecutive observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gap {
    pub start_state: SlotState,
    pub end_state: SlotState,
    /// Unobserved slots strictly between the two observations.
    pub hidden_len: u64,
}

impl Gap {
    /// Transitions spanned by the gap, `hidden_len + 1`.
    pub fn transitions(&self) -> u64 {
        self.hidden_len + 1
    }
}

/// Senses `sequence` according to `schedule`. Slot 1 is always observed.
pub fn observe(sequence: &StateSequence, schedule: &ObservationSchedule) -> Result<ObservedDataset> {
    let states = sequence.states();
    let len = states.len() as u64;
    let mut times = Vec::new();
    let mut observed = Vec::new();
    let mut slot = 1u64;
    let mut skips = schedule.skips()?;
    while slot <= len {
        times.push(slot);
        observed.push(states[(slot - 1) as usize]);
        let skip = skips.next().expect("skip stream is infinite");
        slot = match slot.checked_add(skip + 1) {
            Some(next) => next,
            None => break,
        };
    }
    if times.len() < 2 {
        return Err(Error::ScheduleExhaustsSequence {
            len: states.len(),
            observed: times.len(),
        });
    }
    ObservedDataset::new(times, observed)
}

pub fn gaps(dataset: &ObservedDataset) -> Result<Vec<Gap>> {
    if dataset.len() < 2 {
        return Err(Error::TooFewObservations(dataset.len()));
    }
    Ok(dataset
        .times
        .windows(2)
        .zip(dataset.states.windows(2))
        .map(|(t, s)| Gap {
            start_state: s[0],
            end_state: s[1],
            hidden_len: t[1] - t[0] - 1,
        })
        .collect())
}

/// Rebuilds slot indices from a gap list (first observation at slot 1).
pub fn times_from_gaps(gaps: &[Gap]) -> Vec<u64> {
    let mut times = Vec::with_capacity(gaps.len() + 1);
    let mut slot = 1;
    times.push(slot);
    for gap in gaps {
        slot += gap.transitions();
        times.push(slot);
    }
    times
}

/// Gaps grouped by `(start, end, hidden_len)` with multiplicities.
///
/// Likelihood and E-step contributions depend on a gap only through this
/// key, so evaluating one representative per class is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTable {
    classes: Vec<(Gap, u64)>,
    max_hidden: u64,
    transitions: u64,
}

impl GapTable {
    pub fn new(dataset: &ObservedDataset) -> Result<Self> {
        let mut counts: BTreeMap<Gap, u64> = BTreeMap::new();
        for gap in gaps(dataset)? {
            *counts.entry(gap).or_insert(0) += 1;
        }
        let max_hidden = counts.keys().map(|g| g.hidden_len).max().unwrap_or(0);
        Ok(GapTable {
            classes: counts.into_iter().collect(),
            max_hidden,
            transitions: dataset.transitions(),
        })
    }

    pub fn classes(&self) -> &[(Gap, u64)] {
        &self.classes
    }

    pub fn max_hidden(&self) -> u64 {
        self.max_hidden
    }

    pub fn transitions(&self) -> u64 {
        self.transitions
    }
}
