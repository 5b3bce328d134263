//! The harness commands. Each one builds its seeded realizations, runs the
//! estimator (in parallel across starts, channels or grid rows) and writes
//! its files in a fixed order, so output never depends on scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chan_em_core::em::{run_em_on_table, select_winner};
use chan_em_core::likelihood::{likelihood_level, se_db_between, table_log_likelihood};
use chan_em_core::markov::rank_by_utilization;
use chan_em_core::{
    gaps, heuristic_starts, observe, relative_error, simulate_chain, utilization, ChannelParams,
    EmConfig, EstimateReport, GapTable, MultiStartResult, ObservedDataset, StateSequence,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, GridSpec, StartsSpec};
use crate::error::{HarnessError, Result};
use crate::io::{
    create_dir, fmt_f64, write_dataset, write_json, write_sequence, write_trajectory, CsvFile,
    EstimateReportJson, Provenance,
};

/// γ assumed for the rank uncertainty when no truth is available.
pub const NOMINAL_GAMMA_PERCENT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Trajectories,
    Table1,
    SeGrid,
    Multichannel,
    Rank,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Trajectories => "trajectories",
            Command::Table1 => "table1",
            Command::SeGrid => "se-grid",
            Command::Multichannel => "multichannel",
            Command::Rank => "rank",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// `simulate` also writes the complete slot sequence.
    pub write_sequence: bool,
}

/// Files written by a command and a short human-readable summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    fn file(&mut self, path: PathBuf) -> &Path {
        self.files.push(path);
        self.files.last().expect("just pushed")
    }
}

/// One simulated channel and what the observer saw of it.
#[derive(Debug, Clone)]
pub struct Realization {
    pub channel: usize,
    pub truth: ChannelParams,
    pub sequence: StateSequence,
    pub dataset: ObservedDataset,
    pub table: GapTable,
}

/// Simulates channel `channel` of `config` with its derived seeds.
pub fn realize(config: &ExperimentConfig, channel: usize) -> Result<Realization> {
    let truth = *config
        .truths()?
        .get(channel)
        .ok_or_else(|| HarnessError::config("true_params", format!("no channel {channel}")))?;
    let schedule = config.schedule_for(channel)?;
    let len = schedule.slots_for_observations(config.observed_slots)?;
    let len = usize::try_from(len)
        .map_err(|_| HarnessError::config("observed_slots", "sequence too long for this platform"))?;
    let sequence = simulate_chain(truth, len, config.chain_seed(channel), None)?;
    let dataset = observe(&sequence, &schedule)?;
    debug_assert_eq!(dataset.len(), config.observed_slots);
    let table = GapTable::new(&dataset)?;
    Ok(Realization {
        channel,
        truth,
        sequence,
        dataset,
        table,
    })
}

pub fn em_config(config: &ExperimentConfig, truth: ChannelParams, record: bool) -> EmConfig {
    let mut em = config.em.to_config(Some(truth));
    em.record_trajectory |= record;
    em
}

/// Starting points for a single-channel run on `dataset`.
pub fn resolve_starts(config: &ExperimentConfig, dataset: &ObservedDataset) -> Result<Vec<ChannelParams>> {
    match &config.starts {
        StartsSpec::List(list) => list.iter().map(|s| s.to_params("starts")).collect(),
        StartsSpec::Heuristic { heuristic } => {
            Ok(heuristic_starts(dataset, heuristic.count, config.em.clamp_epsilon)?)
        }
    }
}

/// E-M from every configured start on one realization, scored against its
/// truth.
pub fn run_starts(
    config: &ExperimentConfig,
    realization: &Realization,
    record: bool,
) -> Result<MultiStartResult> {
    let starts = resolve_starts(config, &realization.dataset)?;
    let em = em_config(config, realization.truth, record);
    let runs: Vec<_> = starts
        .par_iter()
        .map(|s| run_em_on_table(&realization.table, *s, &em))
        .collect();
    if let Some(err) = runs.iter().find_map(|r| r.as_ref().err()) {
        return Err(err.clone().into());
    }
    Ok(select_winner(&realization.table, runs, &em)?)
}

/// Per-channel E-M for the multi-channel experiment: channel `i` starts at
/// the `i`-th listed start.
pub fn run_channels(config: &ExperimentConfig, record: bool) -> Result<Vec<(Realization, EstimateReport)>> {
    let truths = config.truths()?;
    let starts = match &config.starts {
        StartsSpec::List(list) if list.len() == truths.len() => list
            .iter()
            .map(|s| s.to_params("starts"))
            .collect::<Result<Vec<_>>>()?,
        StartsSpec::List(_) => {
            return Err(HarnessError::config(
                "starts",
                "needs exactly one start per channel in true_params",
            ))
        }
        StartsSpec::Heuristic { .. } => Vec::new(),
    };
    (0..truths.len())
        .into_par_iter()
        .map(|i| {
            let realization = realize(config, i)?;
            let start = match starts.get(i) {
                Some(s) => *s,
                None => resolve_starts(config, &realization.dataset)?[0],
            };
            let em = em_config(config, realization.truth, record);
            let report = run_em_on_table(&realization.table, start, &em)?;
            Ok((realization, report))
        })
        .collect()
}

pub fn run_command(
    command: Command,
    config: &ExperimentConfig,
    options: RunOptions,
) -> Result<Outcome> {
    config.validate()?;
    create_dir(&config.output_dir)?;
    let provenance = Provenance::new(command.name(), config);
    match command {
        Command::Simulate => cmd_simulate(config, &provenance, options),
        Command::Trajectories => cmd_trajectories(config, &provenance),
        Command::Table1 => cmd_table1(config, &provenance),
        Command::SeGrid => cmd_se_grid(config, &provenance, &config.grid.clone().unwrap_or_default()),
        Command::Multichannel => cmd_multichannel(config, &provenance),
        Command::Rank => cmd_rank(config, &provenance),
    }
}

#[derive(Debug, Serialize)]
struct GapCount {
    hidden_len: u64,
    count: u64,
}

#[derive(Debug, Serialize)]
struct SimulatedChannel {
    index: usize,
    total_slots: usize,
    observed_slots: usize,
    gap_histogram: Vec<GapCount>,
}

#[derive(Debug, Serialize)]
struct SimulateSummary<'a> {
    meta: &'a Provenance,
    channels: Vec<SimulatedChannel>,
}

fn cmd_simulate(config: &ExperimentConfig, provenance: &Provenance, options: RunOptions) -> Result<Outcome> {
    let n = config.truths()?.len();
    let realizations = (0..n)
        .into_par_iter()
        .map(|i| realize(config, i))
        .collect::<Result<Vec<_>>>()?;
    let suffix = |i: usize| if n == 1 { String::new() } else { format!("_{i}") };

    let mut out = Outcome::default();
    let mut channels = Vec::new();
    for r in &realizations {
        let path = out.file(config.output_dir.join(format!("observed{}.csv", suffix(r.channel))));
        write_dataset(path, provenance, &r.dataset)?;
        if options.write_sequence {
            let path = out.file(config.output_dir.join(format!("sequence{}.csv", suffix(r.channel))));
            write_sequence(path, provenance, &r.sequence)?;
        }
        let mut histogram = BTreeMap::new();
        for gap in gaps(&r.dataset)? {
            *histogram.entry(gap.hidden_len).or_insert(0u64) += 1;
        }
        let _ = writeln!(
            out.summary,
            "channel {}: T = {}, K = {}",
            r.channel,
            r.sequence.len(),
            r.dataset.len()
        );
        for (len, count) in &histogram {
            let _ = writeln!(out.summary, "  L = {len}: {count}");
        }
        channels.push(SimulatedChannel {
            index: r.channel,
            total_slots: r.sequence.len(),
            observed_slots: r.dataset.len(),
            gap_histogram: histogram
                .into_iter()
                .map(|(hidden_len, count)| GapCount { hidden_len, count })
                .collect(),
        });
    }
    let path = out.file(config.output_dir.join("simulate.json"));
    write_json(path, &SimulateSummary { meta: provenance, channels })?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct RunsSummary<'a> {
    meta: &'a Provenance,
    true_alpha: f64,
    true_beta: f64,
    winner: usize,
    runs: Vec<EstimateReportJson>,
}

fn runs_summary<'a>(provenance: &'a Provenance, truth: ChannelParams, result: &MultiStartResult) -> RunsSummary<'a> {
    RunsSummary {
        meta: provenance,
        true_alpha: truth.alpha(),
        true_beta: truth.beta(),
        winner: result.winner,
        runs: result
            .runs
            .iter()
            .map(|r| EstimateReportJson::from_report(r.as_ref().expect("failures are propagated"), false))
            .collect(),
    }
}

fn cmd_trajectories(config: &ExperimentConfig, provenance: &Provenance) -> Result<Outcome> {
    config.single_truth()?;
    let realization = realize(config, 0)?;
    let result = run_starts(config, &realization, true)?;
    let mut out = Outcome::default();
    for (i, run) in result.runs.iter().enumerate() {
        let report = run.as_ref().expect("failures are propagated");
        let trajectory = report.trajectory.as_ref().expect("trajectory was requested");
        let path = out.file(config.output_dir.join(format!("trajectory_{i}.csv")));
        write_trajectory(path, provenance, trajectory)?;
        let _ = writeln!(
            out.summary,
            "start {i} ({}, {}) -> ({:.4}, {:.4}) after {} iterations{}",
            report.start.alpha(),
            report.start.beta(),
            report.estimate.alpha(),
            report.estimate.beta(),
            report.iterations_run,
            if i == result.winner { "  [least SE]" } else { "" },
        );
    }
    let path = out.file(config.output_dir.join("trajectories.json"));
    write_json(path, &runs_summary(provenance, realization.truth, &result))?;
    Ok(out)
}

fn cmd_table1(config: &ExperimentConfig, provenance: &Provenance) -> Result<Outcome> {
    config.single_truth()?;
    let realization = realize(config, 0)?;
    let result = run_starts(config, &realization, false)?;
    let iterations = config.em.max_iterations;
    let alpha_col = format!("alpha_{iterations}");
    let beta_col = format!("beta_{iterations}");

    let mut out = Outcome::default();
    let path = out.file(config.output_dir.join("table1.csv"));
    let mut csv = CsvFile::create(
        path,
        provenance,
        &["start_alpha", "start_beta", &alpha_col, &beta_col, "se_db", "winner"],
    )?;
    for (i, run) in result.runs.iter().enumerate() {
        let r = run.as_ref().expect("failures are propagated");
        csv.row([
            fmt_f64(r.start.alpha()),
            fmt_f64(r.start.beta()),
            fmt_f64(r.estimate.alpha()),
            fmt_f64(r.estimate.beta()),
            fmt_f64(r.se_db),
            u8::from(i == result.winner).to_string(),
        ])?;
        let _ = writeln!(
            out.summary,
            "({}, {}) -> ({:.3}, {:.3})  SE {:.1} dB{}",
            r.start.alpha(),
            r.start.beta(),
            r.estimate.alpha(),
            r.estimate.beta(),
            r.se_db,
            if i == result.winner { "  *" } else { "" },
        );
    }
    csv.finish()?;
    Ok(out)
}

/// SE in dB of every grid point against the truth on one realization.
/// Rows are alpha-major; coordinates are the nominal grid values, while
/// the likelihood is evaluated at the point clamped into `[ε, 1 − ε]²`.
pub fn se_grid(
    config: &ExperimentConfig,
    realization: &Realization,
    grid: &GridSpec,
) -> Result<Vec<(f64, f64, f64)>> {
    grid.validate()?;
    let eps = config.em.clamp_epsilon;
    let table = &realization.table;
    let n = table.transitions();
    let scale = em_config(config, realization.truth, false).se_scale;
    let reference = likelihood_level(
        table_log_likelihood(table, realization.truth.clamped(eps))?,
        n,
        scale,
    );
    let points = grid.points();
    let rows: Vec<Vec<(f64, f64, f64)>> = points
        .par_iter()
        .map(|&a| {
            points
                .iter()
                .map(|&b| {
                    let theta = ChannelParams::new(a.min(1.0), b.min(1.0))?.clamped(eps);
                    let level = likelihood_level(table_log_likelihood(table, theta)?, n, scale);
                    Ok((a, b, se_db_between(level, reference)))
                })
                .collect::<chan_em_core::Result<Vec<_>>>()
        })
        .collect::<chan_em_core::Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn cmd_se_grid(config: &ExperimentConfig, provenance: &Provenance, grid: &GridSpec) -> Result<Outcome> {
    config.single_truth()?;
    let realization = realize(config, 0)?;
    let rows = se_grid(config, &realization, grid)?;
    let mut out = Outcome::default();
    let path = out.file(config.output_dir.join("se_grid.csv"));
    let mut csv = CsvFile::create(path, provenance, &["alpha", "beta", "se_db"])?;
    for (a, b, se) in &rows {
        csv.row([fmt_f64(*a), fmt_f64(*b), fmt_f64(*se)])?;
    }
    csv.finish()?;
    let best = rows
        .iter()
        .min_by(|x, y| x.2.total_cmp(&y.2))
        .expect("grid is never empty");
    let _ = writeln!(
        out.summary,
        "{} grid points; least SE {:.1} dB at ({}, {})",
        rows.len(),
        best.2,
        fmt_f64(best.0),
        fmt_f64(best.1)
    );
    Ok(out)
}

/// γ after every iteration of a recorded run.
pub fn gamma_curve(report: &EstimateReport, truth: ChannelParams) -> Result<Vec<(usize, f64)>> {
    let trajectory = report
        .trajectory
        .as_ref()
        .ok_or_else(|| HarnessError::config("em.record_trajectory", "trajectory was not recorded"))?;
    trajectory
        .steps
        .iter()
        .map(|s| {
            let theta = ChannelParams::new(s.alpha, s.beta)?;
            Ok((s.iteration, relative_error(theta, truth)?))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct ChannelSummary {
    index: usize,
    true_alpha: f64,
    true_beta: f64,
    utilization_hat: f64,
    report: EstimateReportJson,
}

#[derive(Debug, Serialize)]
struct MultichannelSummary<'a> {
    meta: &'a Provenance,
    channels: Vec<ChannelSummary>,
}

fn cmd_multichannel(config: &ExperimentConfig, provenance: &Provenance) -> Result<Outcome> {
    let results = run_channels(config, true)?;
    let mut out = Outcome::default();
    let mut channels = Vec::new();
    for (realization, report) in &results {
        let curve = gamma_curve(report, realization.truth)?;
        let path = out.file(config.output_dir.join(format!("channel_{}.csv", realization.channel)));
        let mut csv = CsvFile::create(path, provenance, &["p", "gamma_percent"])?;
        for (p, gamma) in &curve {
            csv.row([p.to_string(), fmt_f64(*gamma)])?;
        }
        csv.finish()?;
        let _ = writeln!(
            out.summary,
            "channel {}: ({}, {}) -> ({:.4}, {:.4}), gamma {:.2}% after {} iterations",
            realization.channel,
            realization.truth.alpha(),
            realization.truth.beta(),
            report.estimate.alpha(),
            report.estimate.beta(),
            report.gamma_percent.unwrap_or(f64::NAN),
            report.iterations_run,
        );
        channels.push(ChannelSummary {
            index: realization.channel,
            true_alpha: realization.truth.alpha(),
            true_beta: realization.truth.beta(),
            utilization_hat: utilization(report.estimate)?,
            report: EstimateReportJson::from_report(report, false),
        });
    }
    let path = out.file(config.output_dir.join("multichannel.json"));
    write_json(path, &MultichannelSummary { meta: provenance, channels })?;
    Ok(out)
}

/// Half-width of the utilization interval implied by relative errors of
/// `gamma_percent` on both parameters (worst case over the box).
pub fn utilization_half_width(estimate: ChannelParams, gamma_percent: f64) -> f64 {
    let r = gamma_percent / 100.0;
    let (a, b) = (estimate.alpha(), estimate.beta());
    let ratio = |num: f64, den: f64| if num + den > 0.0 { num / (num + den) } else { 0.0 };
    let lo = ratio(b * (1.0 - r).max(0.0), a * (1.0 + r));
    let hi = ratio(b * (1.0 + r), a * (1.0 - r).max(0.0));
    0.5 * (hi - lo)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedChannel {
    pub index: usize,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub utilization_hat: f64,
    pub utilization_true: Option<f64>,
    pub gamma_percent: Option<f64>,
    pub utilization_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosePair {
    pub first: usize,
    pub second: usize,
    pub utilization_gap: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking {
    /// Channel indices by ascending estimated utilization.
    pub order: Vec<usize>,
    pub true_order: Option<Vec<usize>>,
    /// Channels in `order`.
    pub channels: Vec<RankedChannel>,
    /// Pairs whose utilization gap is below twice the larger half-width.
    pub close_pairs: Vec<ClosePair>,
}

/// Ranks channels by estimated utilization and flags pairs the estimation
/// error could swap.
pub fn rank(estimates: &[(ChannelParams, Option<ChannelParams>, Option<f64>)]) -> Result<Ranking> {
    let mut rows = Vec::with_capacity(estimates.len());
    for (index, (estimate, truth, gamma)) in estimates.iter().enumerate() {
        rows.push(RankedChannel {
            index,
            alpha_hat: estimate.alpha(),
            beta_hat: estimate.beta(),
            utilization_hat: utilization(*estimate)?,
            utilization_true: truth.map(utilization).transpose()?,
            gamma_percent: *gamma,
            utilization_half_width: utilization_half_width(
                *estimate,
                gamma.unwrap_or(NOMINAL_GAMMA_PERCENT),
            ),
        });
    }
    let order = rank_by_utilization(&rows.iter().map(|r| r.utilization_hat).collect::<Vec<_>>());
    let true_order = rows
        .iter()
        .map(|r| r.utilization_true)
        .collect::<Option<Vec<f64>>>()
        .map(|u| rank_by_utilization(&u));
    let channels: Vec<RankedChannel> = order.iter().map(|&i| rows[i].clone()).collect();
    let mut close_pairs = Vec::new();
    for (k, x) in channels.iter().enumerate() {
        for y in &channels[k + 1..] {
            let gap = y.utilization_hat - x.utilization_hat;
            let threshold = 2.0 * x.utilization_half_width.max(y.utilization_half_width);
            if gap < threshold {
                close_pairs.push(ClosePair {
                    first: x.index,
                    second: y.index,
                    utilization_gap: gap,
                    threshold,
                });
            }
        }
    }
    Ok(Ranking {
        order,
        true_order,
        channels,
        close_pairs,
    })
}

#[derive(Debug, Serialize)]
struct RankFile<'a> {
    meta: &'a Provenance,
    #[serde(flatten)]
    ranking: Ranking,
}

fn cmd_rank(config: &ExperimentConfig, provenance: &Provenance) -> Result<Outcome> {
    let results = run_channels(config, false)?;
    let estimates: Vec<_> = results
        .iter()
        .map(|(r, report)| (report.estimate, Some(r.truth), report.gamma_percent))
        .collect();
    let ranking = rank(&estimates)?;
    let mut out = Outcome::default();
    let _ = writeln!(out.summary, "order by estimated utilization: {:?}", ranking.order);
    if let Some(truth) = &ranking.true_order {
        let _ = writeln!(out.summary, "order by true utilization:      {truth:?}");
    }
    for pair in &ranking.close_pairs {
        let _ = writeln!(
            out.summary,
            "channels {} and {} are within the estimation uncertainty (gap {:.4} < {:.4})",
            pair.first, pair.second, pair.utilization_gap, pair.threshold
        );
    }
    let path = out.file(config.output_dir.join("rank.json"));
    write_json(path, &RankFile { meta: provenance, ranking })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> ChannelParams {
        ChannelParams::new(a, b).unwrap()
    }

    #[test]
    fn rank_of_fig5_truths() {
        let truths = [p(0.8, 0.3), p(0.2, 0.9), p(0.4, 0.1), p(0.7, 0.5), p(0.9, 0.6)];
        let input: Vec<_> = truths.iter().map(|t| (*t, Some(*t), Some(0.0))).collect();
        let ranking = rank(&input).unwrap();
        assert_eq!(ranking.order, [2, 0, 4, 3, 1]);
        assert_eq!(ranking.true_order.as_deref(), Some(&[2, 0, 4, 3, 1][..]));
        assert!(ranking.close_pairs.is_empty());

        // at the nominal 5% the 0.40 / 0.417 pair is flagged, nothing else
        let input: Vec<_> = truths.iter().map(|t| (*t, None, None)).collect();
        let ranking = rank(&input).unwrap();
        let pairs: Vec<_> = ranking.close_pairs.iter().map(|c| (c.first, c.second)).collect();
        assert_eq!(pairs, [(4, 3)]);
    }

    #[test]
    fn rank_singleton() {
        let ranking = rank(&[(p(0.3, 0.3), None, None)]).unwrap();
        assert_eq!(ranking.order, [0]);
        assert!(ranking.close_pairs.is_empty());
    }

    #[test]
    fn half_width_grows_with_gamma() {
        let e = p(0.8, 0.3);
        assert_eq!(utilization_half_width(e, 0.0), 0.0);
        let w5 = utilization_half_width(e, 5.0);
        let w10 = utilization_half_width(e, 10.0);
        assert!(w5 > 0.0 && w10 > w5);
        // u = 3/11; a ±5% box moves it by about u(1-u)·0.1
        assert!((w5 - 3.0 / 11.0 * 8.0 / 11.0 * 0.1).abs() < 2e-3);
    }
}
