//! Experiment configuration files and the built-in presets.
//!
//! Configs are JSON. Unknown fields are rejected so a typo never silently
//! falls back to a default.

use std::path::PathBuf;

use chan_em_core::seed::derive_seed;
use chan_em_core::{ChannelParams, EmConfig, ObservationSchedule, SeScale};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Seed streams; combined with a task index through [`derive_seed`].
pub(crate) const STREAM_CHAIN: u64 = 1;
pub(crate) const STREAM_SCHEDULE: u64 = 2;

pub const DEFAULT_OBSERVED_SLOTS: usize = 100_000;
pub const FULL_SCALE_OBSERVED_SLOTS: usize = 1_000_000;
pub const DEFAULT_MASTER_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub alpha: f64,
    pub beta: f64,
}

impl ParamsSpec {
    pub const fn new(alpha: f64, beta: f64) -> Self {
        ParamsSpec { alpha, beta }
    }

    pub fn to_params(self, field: &str) -> Result<ChannelParams> {
        ChannelParams::new(self.alpha, self.beta)
            .map_err(|e| HarnessError::config(field, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrueParams {
    One(ParamsSpec),
    Many(Vec<ParamsSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Fixed {
        skip: u64,
    },
    RandomUniform {
        support: Vec<u64>,
        /// Derived from `master_seed` and the channel index when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicSpec {
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartsSpec {
    List(Vec<ParamsSpec>),
    Heuristic { heuristic: HeuristicSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmSpec {
    pub max_iterations: usize,
    pub param_tolerance: f64,
    pub clamp_epsilon: f64,
    pub record_trajectory: bool,
}

impl Default for EmSpec {
    fn default() -> Self {
        let d = EmConfig::default();
        EmSpec {
            max_iterations: d.max_iterations,
            param_tolerance: d.param_tolerance,
            clamp_epsilon: d.clamp_epsilon,
            record_trajectory: d.record_trajectory,
        }
    }
}

impl EmSpec {
    pub fn to_config(&self, truth: Option<ChannelParams>) -> EmConfig {
        EmConfig {
            max_iterations: self.max_iterations,
            param_tolerance: self.param_tolerance,
            clamp_epsilon: self.clamp_epsilon,
            record_trajectory: self.record_trajectory,
            truth,
            se_scale: SeScale::PerTransition,
        }
    }
}

/// Grid of candidate estimates for the squared-error map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub step: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { step: 0.02, lo: 0.0, hi: 1.0 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 0.5) {
            return Err(HarnessError::config("grid.step", "must lie in (0, 0.5]"));
        }
        if !(0.0 <= self.lo && self.lo < self.hi && self.hi <= 1.0) {
            return Err(HarnessError::config("grid", "need 0 <= lo < hi <= 1"));
        }
        let cells = (self.hi - self.lo) / self.step;
        if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) {
            return Err(HarnessError::config("grid.step", "must divide hi - lo"));
        }
        Ok(())
    }

    /// Grid coordinates along one axis, `lo, lo + step, ..., hi`.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step).round() as usize;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub true_params: TrueParams,
    pub schedule: ScheduleSpec,
    pub observed_slots: usize,
    pub starts: StartsSpec,
    #[serde(default)]
    pub em: EmSpec,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::config("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let truths = self.truths()?;
        if truths.is_empty() {
            return Err(HarnessError::config("true_params", "at least one channel is required"));
        }
        if self.observed_slots < 2 {
            return Err(HarnessError::config("observed_slots", "must be at least 2"));
        }
        self.schedule_for(0)?
            .validate()
            .map_err(|e| HarnessError::config("schedule.support", e.to_string()))?;
        match &self.starts {
            StartsSpec::List(list) => {
                if list.is_empty() {
                    return Err(HarnessError::config("starts", "at least one start is required"));
                }
                for s in list {
                    s.to_params("starts")?;
                }
            }
            StartsSpec::Heuristic { heuristic } => {
                if heuristic.count == 0 {
                    return Err(HarnessError::config("starts.heuristic.count", "must be positive"));
                }
            }
        }
        self.em
            .to_config(None)
            .validate()
            .map_err(|e| HarnessError::config("em", e.to_string()))?;
        if let Some(grid) = &self.grid {
            grid.validate()?;
        }
        Ok(())
    }

    pub fn truths(&self) -> Result<Vec<ChannelParams>> {
        match &self.true_params {
            TrueParams::One(p) => Ok(vec![p.to_params("true_params")?]),
            TrueParams::Many(list) => list.iter().map(|p| p.to_params("true_params")).collect(),
        }
    }

    /// The configured truth, which must be a single channel.
    pub fn single_truth(&self) -> Result<ChannelParams> {
        let truths = self.truths()?;
        match truths.as_slice() {
            [one] => Ok(*one),
            _ => Err(HarnessError::config(
                "true_params",
                "this command expects exactly one channel",
            )),
        }
    }

    pub fn schedule_for(&self, channel: usize) -> Result<ObservationSchedule> {
        Ok(match &self.schedule {
            ScheduleSpec::Fixed { skip } => ObservationSchedule::Fixed { skip: *skip },
            ScheduleSpec::RandomUniform { support, seed } => ObservationSchedule::RandomUniform {
                support: support.clone(),
                seed: seed.unwrap_or_else(|| {
                    derive_seed(self.master_seed, STREAM_SCHEDULE, channel as u64)
                }),
            },
        })
    }

    pub fn chain_seed(&self, channel: usize) -> u64 {
        derive_seed(self.master_seed, STREAM_CHAIN, channel as u64)
    }

    /// Copy used for hashing: identical experiments hash identically
    /// regardless of where their output goes.
    pub(crate) fn hash_view(&self) -> ExperimentConfig {
        ExperimentConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        }
    }
}

/// Built-in reproductions of the published experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    #[value(name = "paper-fig3")]
    PaperFig3,
    #[value(name = "paper-table1")]
    PaperTable1,
    #[value(name = "paper-fig4")]
    PaperFig4,
    #[value(name = "paper-fig5")]
    PaperFig5,
}

/// Starting points of the single-channel convergence study.
pub const TABLE1_STARTS: [ParamsSpec; 8] = [
    ParamsSpec::new(0.1, 0.6),
    ParamsSpec::new(0.2, 0.7),
    ParamsSpec::new(0.3, 0.1),
    ParamsSpec::new(0.4, 0.5),
    ParamsSpec::new(0.6, 0.5),
    ParamsSpec::new(0.7, 0.7),
    ParamsSpec::new(0.8, 0.5),
    ParamsSpec::new(0.9, 0.8),
];

pub const FIG5_CHANNELS: [ParamsSpec; 5] = [
    ParamsSpec::new(0.8, 0.3),
    ParamsSpec::new(0.2, 0.9),
    ParamsSpec::new(0.4, 0.1),
    ParamsSpec::new(0.7, 0.5),
    ParamsSpec::new(0.9, 0.6),
];

pub const FIG5_STARTS: [ParamsSpec; 5] = [
    ParamsSpec::new(0.6, 0.5),
    ParamsSpec::new(0.4, 0.8),
    ParamsSpec::new(0.1, 0.3),
    ParamsSpec::new(0.8, 0.3),
    ParamsSpec::new(0.7, 0.4),
];

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperFig3 => "paper-fig3",
            Preset::PaperTable1 => "paper-table1",
            Preset::PaperFig4 => "paper-fig4",
            Preset::PaperFig5 => "paper-fig5",
        }
    }

    pub fn config(self) -> ExperimentConfig {
        let single = |record: bool, grid: Option<GridSpec>| ExperimentConfig {
            true_params: TrueParams::One(ParamsSpec::new(0.8, 0.3)),
            schedule: ScheduleSpec::Fixed { skip: 4 },
            observed_slots: DEFAULT_OBSERVED_SLOTS,
            starts: StartsSpec::List(TABLE1_STARTS.to_vec()),
            em: EmSpec {
                max_iterations: 100,
                record_trajectory: record,
                ..EmSpec::default()
            },
            master_seed: DEFAULT_MASTER_SEED,
            output_dir: PathBuf::from("out").join(self.name()),
            grid,
        };
        match self {
            Preset::PaperFig3 => single(true, None),
            Preset::PaperTable1 => single(false, None),
            Preset::PaperFig4 => single(false, Some(GridSpec::default())),
            Preset::PaperFig5 => ExperimentConfig {
                true_params: TrueParams::Many(FIG5_CHANNELS.to_vec()),
                schedule: ScheduleSpec::RandomUniform {
                    support: (1..=6).collect(),
                    seed: None,
                },
                observed_slots: DEFAULT_OBSERVED_SLOTS,
                starts: StartsSpec::List(FIG5_STARTS.to_vec()),
                em: EmSpec {
                    max_iterations: 1000,
                    record_trajectory: true,
                    ..EmSpec::default()
                },
                master_seed: DEFAULT_MASTER_SEED,
                output_dir: PathBuf::from("out").join(self.name()),
                grid: None,
            },
        }
    }
}
