#![allow(dead_code)]

use chan_em_core::{ChannelParams, ObservedDataset, SlotState, SufficientStats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn p(a: f64, b: f64) -> ChannelParams {
    ChannelParams::new(a, b).unwrap()
}

fn step(params: ChannelParams, from: u8, to: u8) -> f64 {
    match (from, to) {
        (0, 0) => 1.0 - params.alpha(),
        (0, 1) => params.alpha(),
        (1, 0) => params.beta(),
        _ => 1.0 - params.beta(),
    }
}

/// Every completion of the hidden slots with its path probability
/// (conditioned on the first observed state) and transition counts.
pub fn completions(dataset: &ObservedDataset, params: ChannelParams) -> Vec<(f64, SufficientStats)> {
    let len = dataset.last_slot() as usize;
    let mut template: Vec<Option<u8>> = vec![None; len];
    for (&t, &s) in dataset.times().iter().zip(dataset.states()) {
        template[(t - 1) as usize] = Some(s.bit());
    }
    let hidden: Vec<usize> = (0..len).filter(|&i| template[i].is_none()).collect();
    assert!(hidden.len() <= 16, "oracle instance too large");
    let mut out = Vec::with_capacity(1 << hidden.len());
    for mask in 0u32..(1u32 << hidden.len()) {
        let mut path: Vec<u8> = template.iter().map(|s| s.unwrap_or(0)).collect();
        for (bit, &pos) in hidden.iter().enumerate() {
            path[pos] = ((mask >> bit) & 1) as u8;
        }
        let mut prob = 1.0;
        let mut stats = SufficientStats::default();
        for w in path.windows(2) {
            prob *= step(params, w[0], w[1]);
            match (w[0], w[1]) {
                (0, 1) => {
                    stats.t01 += 1.0;
                    stats.n0 += 1.0;
                }
                (0, _) => stats.n0 += 1.0,
                (1, 0) => {
                    stats.t10 += 1.0;
                    stats.n1 += 1.0;
                }
                _ => stats.n1 += 1.0,
            }
        }
        out.push((prob, stats));
    }
    out
}

pub fn enumerated_likelihood(dataset: &ObservedDataset, params: ChannelParams) -> f64 {
    completions(dataset, params).iter().map(|(w, _)| w).sum()
}

/// Posterior expectation of the sufficient statistics by enumeration.
pub fn enumerated_expectation(dataset: &ObservedDataset, params: ChannelParams) -> SufficientStats {
    let all = completions(dataset, params);
    let total: f64 = all.iter().map(|(w, _)| w).sum();
    let mut acc = SufficientStats::default();
    for (w, s) in &all {
        let q = w / total;
        acc.t01 += q * s.t01;
        acc.t10 += q * s.t10;
        acc.n0 += q * s.n0;
        acc.n1 += q * s.n1;
    }
    acc
}

/// Random dataset with at most `max_hidden` hidden slots in total.
pub fn random_small_dataset(rng: &mut ChaCha8Rng, max_hidden: u64) -> ObservedDataset {
    let k = rng.gen_range(2..=8usize);
    let mut budget = max_hidden;
    let mut times = vec![1u64];
    for _ in 1..k {
        let gap = if budget == 0 { 0 } else { rng.gen_range(0..=budget.min(5)) };
        budget -= gap;
        times.push(times.last().unwrap() + gap + 1);
    }
    let states = (0..k)
        .map(|_| if rng.gen_bool(0.5) { SlotState::Idle } else { SlotState::Occupied })
        .collect();
    ObservedDataset::new(times, states).unwrap()
}

pub fn random_grid_params(rng: &mut ChaCha8Rng) -> ChannelParams {
    p(rng.gen_range(1..=9) as f64 / 10.0, rng.gen_range(1..=9) as f64 / 10.0)
}

pub fn random_interior_params(rng: &mut ChaCha8Rng) -> ChannelParams {
    p(rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
