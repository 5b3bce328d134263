//! Expectation-maximization for transition probabilities observed through
//! gaps.
//!
//! The E-step conditions the hidden stretch of every gap on both of its
//! observed endpoints (a Markov bridge). For a gap `a → b` spanning `g + 1`
//! transitions, position `j` carries the pair law
//!
//! ```text
//! P(x_j = u, x_{j+1} = v | a, b) = [P^j]_{a,u} · P_{u,v} · [P^(g−j)]_{v,b} / [P^(g+1)]_{a,b}
//! ```
//!
//! Summing these over positions and gaps gives the expected sufficient
//! statistics; the M-step is the complete-data ratio estimator applied to
//! them.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::likelihood::{
    likelihood_level, powers_log_likelihood, se_db_between, table_log_likelihood,
    table_squared_error_db, PowerTable, SeScale, SE_FLOOR_DB,
};
use crate::markov::ChannelParams;
use crate::observation::{GapTable, ObservedDataset};
use crate::stats::SufficientStats;

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Stop once `max(|Δα|, |Δβ|)` drops below this; `0` runs every iteration.
    pub param_tolerance: f64,
    /// Iterates are kept inside `[ε, 1 − ε]²`.
    pub clamp_epsilon: f64,
    pub record_trajectory: bool,
    /// Reference parameters for the squared error and relative error.
    /// Without it, runs are scored against the best likelihood among the
    /// runs being compared.
    pub truth: Option<ChannelParams>,
    pub se_scale: SeScale,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iterations: 100,
            param_tolerance: 0.0,
            clamp_epsilon: 1e-9,
            record_trajectory: false,
            truth: None,
            se_scale: SeScale::PerTransition,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive"));
        }
        if !(self.param_tolerance >= 0.0) || !self.param_tolerance.is_finite() {
            return Err(Error::InvalidConfig("param_tolerance must be a finite value >= 0"));
        }
        if !(self.clamp_epsilon > 0.0 && self.clamp_epsilon <= 0.01) {
            return Err(Error::InvalidConfig("clamp_epsilon must lie in (0, 0.01]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryStep {
    /// `0` is the (clamped) starting point.
    pub iteration: usize,
    pub alpha: f64,
    pub beta: f64,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmTrajectory {
    pub steps: Vec<TrajectoryStep>,
    pub converged_at: Option<usize>,
}

impl EmTrajectory {
    /// Largest decrease of the log-likelihood between consecutive steps
    /// (`0` if it never decreases).
    pub fn max_likelihood_drop(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|w| w[0].log_likelihood - w[1].log_likelihood)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimate: ChannelParams,
    pub start: ChannelParams,
    pub iterations_run: usize,
    pub log_likelihood: f64,
    pub se_db: f64,
    pub gamma_percent: Option<f64>,
    pub trajectory: Option<EmTrajectory>,
}

/// Conditional expectation of the sufficient statistics given the
/// observations and `params`.
pub fn e_step(dataset: &ObservedDataset, params: ChannelParams) -> Result<SufficientStats> {
    params.require_interior()?;
    let table = GapTable::new(dataset)?;
    let powers = PowerTable::new(params, table.max_hidden() + 1);
    table_e_step(&table, &powers)
}

pub(crate) fn table_e_step(table: &GapTable, powers: &PowerTable) -> Result<SufficientStats> {
    let step = *powers.power(1);
    let mut stats = SufficientStats::default();
    for (gap, count) in table.classes() {
        let (a, b) = (gap.start_state.index(), gap.end_state.index());
        let g = gap.hidden_len;
        let bridge = powers.power(g + 1)[a][b];
        if !(bridge > 0.0) {
            return Err(Error::ZeroBridge {
                from: gap.start_state.bit(),
                to: gap.end_state.bit(),
                transitions: gap.transitions(),
            });
        }
        let mut pair = [[0.0f64; 2]; 2];
        for j in 0..=g {
            let head = powers.power(j);
            let tail = powers.power(g - j);
            for u in 0..2 {
                for v in 0..2 {
                    pair[u][v] += head[a][u] * step[u][v] * tail[v][b];
                }
            }
        }
        // Every position's pair law sums to the bridge probability; dividing by
        // the accumulated mass keeps E[n0] + E[n1] equal to the transition count.
        let mass: f64 = pair.iter().flatten().sum();
        let scale = (gap.transitions() * count) as f64 / mass;
        stats.t01 += pair[0][1] * scale;
        stats.t10 += pair[1][0] * scale;
        stats.n0 += (pair[0][0] + pair[0][1]) * scale;
        stats.n1 += (pair[1][0] + pair[1][1]) * scale;
    }
    Ok(stats)
}

/// Ratio estimator on expected statistics, clamped into `[ε, 1 − ε]`.
pub fn m_step(expected: &SufficientStats, clamp_epsilon: f64) -> Result<ChannelParams> {
    if !(expected.n0 > 0.0) {
        return Err(Error::InsufficientData { state: 0 });
    }
    if !(expected.n1 > 0.0) {
        return Err(Error::InsufficientData { state: 1 });
    }
    let lo = clamp_epsilon;
    let hi = 1.0 - clamp_epsilon;
    ChannelParams::new(
        (expected.t01 / expected.n0).clamp(lo, hi),
        (expected.t10 / expected.n1).clamp(lo, hi),
    )
}

/// Runs E-M from `start` until `max_iterations` or the tolerance is met.
pub fn run_em(
    dataset: &ObservedDataset,
    start: ChannelParams,
    config: &EmConfig,
) -> Result<EstimateReport> {
    config.validate()?;
    let table = GapTable::new(dataset)?;
    run_em_on_table(&table, start, config)
}

/// [`run_em`] over a precomputed gap table.
pub fn run_em_on_table(
    table: &GapTable,
    start: ChannelParams,
    config: &EmConfig,
) -> Result<EstimateReport> {
    config.validate()?;
    let max_power = table.max_hidden() + 1;
    let mut theta = start.clamped(config.clamp_epsilon);

    let mut trajectory = config.record_trajectory.then(EmTrajectory::default);
    let mut powers = PowerTable::new(theta, max_power);
    let mut log_likelihood = powers_log_likelihood(table, &powers).map_err(at(0))?;
    if let Some(traj) = trajectory.as_mut() {
        traj.steps.push(step_record(0, theta, log_likelihood));
    }

    let mut iterations_run = 0;
    let mut converged_at = None;
    for iteration in 1..=config.max_iterations {
        let expected = table_e_step(table, &powers).map_err(at(iteration))?;
        let next = m_step(&expected, config.clamp_epsilon).map_err(at(iteration))?;
        let delta = next.max_abs_diff(&theta);
        theta = next;
        iterations_run = iteration;

        powers = PowerTable::new(theta, max_power);
        log_likelihood = powers_log_likelihood(table, &powers).map_err(at(iteration))?;
        if let Some(traj) = trajectory.as_mut() {
            traj.steps.push(step_record(iteration, theta, log_likelihood));
        }
        if config.param_tolerance > 0.0 && delta < config.param_tolerance {
            converged_at = Some(iteration);
            break;
        }
    }
    if let Some(traj) = trajectory.as_mut() {
        traj.converged_at = converged_at;
    }

    let (se_db, gamma_percent) = match config.truth {
        Some(truth) => {
            let reference = truth.clamped(config.clamp_epsilon);
            let se = table_squared_error_db(table, theta, reference, config.se_scale)?;
            (se, relative_error(theta, truth).ok())
        }
        None => (SE_FLOOR_DB, None),
    };

    Ok(EstimateReport {
        estimate: theta,
        start,
        iterations_run,
        log_likelihood,
        se_db,
        gamma_percent,
        trajectory,
    })
}

fn step_record(iteration: usize, theta: ChannelParams, log_likelihood: f64) -> TrajectoryStep {
    TrajectoryStep {
        iteration,
        alpha: theta.alpha(),
        beta: theta.beta(),
        log_likelihood,
    }
}

fn at(iteration: usize) -> impl Fn(Error) -> Error {
    move |source| Error::AtIteration {
        iteration,
        source: Box::new(source),
    }
}

/// Outcome of several E-M runs on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartResult {
    pub winner: usize,
    pub runs: Vec<Result<EstimateReport>>,
}

impl MultiStartResult {
    pub fn winner_report(&self) -> &EstimateReport {
        self.runs[self.winner]
            .as_ref()
            .expect("winner index always points at a successful run")
    }
}

/// Runs E-M from every start and selects the run with the least squared
/// error.
pub fn multi_start(
    dataset: &ObservedDataset,
    starts: &[ChannelParams],
    config: &EmConfig,
) -> Result<MultiStartResult> {
    if starts.is_empty() {
        return Err(Error::NoStarts);
    }
    config.validate()?;
    let table = GapTable::new(dataset)?;
    let runs = starts
        .iter()
        .map(|s| run_em_on_table(&table, *s, config))
        .collect();
    select_winner(&table, runs, config)
}

/// Picks the least-SE run: lowest `se_db`, then highest log-likelihood, then
/// lowest index.
///
/// Without a known truth, each run's SE is recomputed against the largest
/// per-transition likelihood among the successful runs.
pub fn select_winner(
    table: &GapTable,
    mut runs: Vec<Result<EstimateReport>>,
    config: &EmConfig,
) -> Result<MultiStartResult> {
    if runs.is_empty() {
        return Err(Error::NoStarts);
    }
    if config.truth.is_none() {
        let n = table.transitions();
        let level = |r: &EstimateReport| likelihood_level(r.log_likelihood, n, config.se_scale);
        let target = runs
            .iter()
            .filter_map(|r| r.as_ref().ok())
            .map(level)
            .fold(f64::NEG_INFINITY, f64::max);
        for report in runs.iter_mut().filter_map(|r| r.as_mut().ok()) {
            report.se_db = se_db_between(level(report), target);
        }
    }

    let winner = runs
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().ok().map(|r| (i, r)))
        .min_by(|(i, a), (j, b)| {
            a.se_db
                .partial_cmp(&b.se_db)
                .unwrap_or(Ordering::Equal)
                .then_with(|| {
                    b.log_likelihood
                        .partial_cmp(&a.log_likelihood)
                        .unwrap_or(Ordering::Equal)
                })
                .then(i.cmp(j))
        })
        .map(|(i, _)| i);

    match winner {
        Some(winner) => Ok(MultiStartResult { winner, runs }),
        None => Err(Error::AllStartsFailed(
            runs.into_iter()
                .enumerate()
                .filter_map(|(i, r)| r.err().map(|e| (i, e)))
                .collect(),
        )),
    }
}

/// Starting points along the line `β = m·α` with `m = û / (1 − û)`, where
/// `û` is the observed occupied fraction. The line passes through every
/// parameter pair with utilization `û`.
pub fn heuristic_starts(
    dataset: &ObservedDataset,
    count: usize,
    clamp_epsilon: f64,
) -> Result<Vec<ChannelParams>> {
    if count == 0 {
        return Err(Error::NoStarts);
    }
    let occupied = dataset.occupied_count();
    if occupied == 0 || occupied == dataset.len() {
        return Err(Error::DegenerateObservations);
    }
    let u_hat = occupied as f64 / dataset.len() as f64;
    let slope = u_hat / (1.0 - u_hat);
    let lo = clamp_epsilon;
    let hi = (1.0f64).min(1.0 / slope) - clamp_epsilon;
    let width = hi - lo;
    (0..count)
        .map(|i| {
            let a = lo + (i as f64 + 0.5) * width / count as f64;
            ChannelParams::new(a, slope * a).map(|p| p.clamped(clamp_epsilon))
        })
        .collect()
}

/// Mean relative error of both parameters, in percent.
pub fn relative_error(estimate: ChannelParams, truth: ChannelParams) -> Result<f64> {
    if truth.alpha() == 0.0 {
        return Err(Error::ZeroTruthParameter { name: "alpha" });
    }
    if truth.beta() == 0.0 {
        return Err(Error::ZeroTruthParameter { name: "beta" });
    }
    let da = libm::fabs(truth.alpha() - estimate.alpha()) / truth.alpha();
    let db = libm::fabs(truth.beta() - estimate.beta()) / truth.beta();
    Ok(0.5 * (da + db) * 100.0)
}

/// Log-likelihood at `params`, for callers holding a [`GapTable`].
pub fn log_likelihood_at(table: &GapTable, params: ChannelParams) -> Result<f64> {
    table_log_likelihood(table, params)
}

/// A single E-step followed by an M-step.
pub fn em_update(table: &GapTable, params: ChannelParams, clamp_epsilon: f64) -> Result<ChannelParams> {
    params.require_interior()?;
    let powers = PowerTable::new(params, table.max_hidden() + 1);
    let expected = table_e_step(table, &powers)?;
    m_step(&expected, clamp_epsilon)
}
