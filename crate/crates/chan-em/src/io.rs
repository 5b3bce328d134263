//! File formats: datasets and sequences as CSV, trajectories as CSV,
//! estimate reports and summaries as JSON.
//!
//! Every file starts with provenance (a `#` comment line in CSV, a `meta`
//! object in JSON) naming the tool version, command, master seed and the
//! SHA-256 of the configuration. No timestamps are written, so reruns are
//! byte-identical.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chan_em_core::{
    EmTrajectory, EstimateReport, ObservedDataset, SlotState, StateSequence, TrajectoryStep,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub config_sha256: String,
}

impl Provenance {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        let canonical =
            serde_json::to_vec(&config.hash_view()).expect("config always serializes");
        let digest = Sha256::digest(&canonical);
        let hex = digest.iter().map(|b| format!("{b:02x}")).collect::<String>();
        Provenance {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            master_seed: config.master_seed,
            config_sha256: hex,
        }
    }

    pub fn comment_line(&self) -> String {
        format!(
            "# {} {} command={} master_seed={} config_sha256={}",
            self.tool, self.version, self.command, self.master_seed, self.config_sha256
        )
    }
}

/// A CSV file in the making: provenance comment, header, rows.
#[derive(Debug)]
pub struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvFile {
    pub fn create(path: &Path, provenance: &Provenance, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        let mut buf = BufWriter::new(file);
        writeln!(buf, "{}", provenance.comment_line()).map_err(|e| HarnessError::io(path, e))?;
        let mut writer = csv::WriterBuilder::new().from_writer(buf);
        writer.write_record(header).map_err(|e| csv_err(path, e))?;
        Ok(CsvFile {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| csv_err(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| HarnessError::io(&self.path, e))
    }
}

fn csv_err(path: &Path, err: csv::Error) -> HarnessError {
    if err.is_io_error() {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => HarnessError::io(path, io),
            other => HarnessError::format(path, format!("{other:?}")),
        }
    } else {
        HarnessError::format(path, err)
    }
}

/// Shortest decimal that parses back to the same `f64`; never locale
/// dependent.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::format(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SlotRow {
    slot_index: u64,
    state: u8,
}

fn write_slots<'a>(
    path: &Path,
    provenance: &Provenance,
    rows: impl Iterator<Item = (u64, &'a SlotState)>,
) -> Result<()> {
    let mut csv = CsvFile::create(path, provenance, &["slot_index", "state"])?;
    for (slot, state) in rows {
        csv.row([slot.to_string(), state.bit().to_string()])?;
    }
    csv.finish()
}

fn read_slots(path: &Path) -> Result<(Vec<u64>, Vec<SlotState>)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    for row in reader.deserialize::<SlotRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let state = SlotState::from_bit(u64::from(row.state))
            .map_err(|e| HarnessError::format(path, e))?;
        times.push(row.slot_index);
        states.push(state);
    }
    Ok((times, states))
}

/// Observed dataset as `slot_index,state` rows.
pub fn write_dataset(path: &Path, provenance: &Provenance, dataset: &ObservedDataset) -> Result<()> {
    write_slots(
        path,
        provenance,
        dataset.times().iter().copied().zip(dataset.states()),
    )
}

pub fn read_dataset(path: &Path) -> Result<ObservedDataset> {
    let (times, states) = read_slots(path)?;
    ObservedDataset::new(times, states).map_err(|e| HarnessError::format(path, e))
}

/// Full slot sequence in the dataset format, every slot from 1 to T.
pub fn write_sequence(path: &Path, provenance: &Provenance, sequence: &StateSequence) -> Result<()> {
    write_slots(path, provenance, (1u64..).zip(sequence.states()))
}

pub fn read_sequence(path: &Path) -> Result<StateSequence> {
    let (times, states) = read_slots(path)?;
    if times.iter().zip(1u64..).any(|(t, expected)| *t != expected) {
        return Err(HarnessError::format(path, "sequence slots must be 1, 2, ..., T"));
    }
    StateSequence::new(states).map_err(|e| HarnessError::format(path, e))
}

/// Trajectory as `p,alpha,beta,loglik` rows.
pub fn write_trajectory(path: &Path, provenance: &Provenance, trajectory: &EmTrajectory) -> Result<()> {
    let mut csv = CsvFile::create(path, provenance, &["p", "alpha", "beta", "loglik"])?;
    for step in &trajectory.steps {
        csv.row([
            step.iteration.to_string(),
            fmt_f64(step.alpha),
            fmt_f64(step.beta),
            fmt_f64(step.log_likelihood),
        ])?;
    }
    csv.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPointJson {
    pub p: usize,
    pub alpha: f64,
    pub beta: f64,
    pub loglik: f64,
}

impl From<&TrajectoryStep> for TrajectoryPointJson {
    fn from(step: &TrajectoryStep) -> Self {
        TrajectoryPointJson {
            p: step.iteration,
            alpha: step.alpha,
            beta: step.beta,
            loglik: step.log_likelihood,
        }
    }
}

/// JSON form of an [`EstimateReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReportJson {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub start_alpha: f64,
    pub start_beta: f64,
    pub iterations: usize,
    pub se_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_percent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<TrajectoryPointJson>>,
}

impl EstimateReportJson {
    pub fn from_report(report: &EstimateReport, with_trajectory: bool) -> Self {
        EstimateReportJson {
            alpha_hat: report.estimate.alpha(),
            beta_hat: report.estimate.beta(),
            start_alpha: report.start.alpha(),
            start_beta: report.start.beta(),
            iterations: report.iterations_run,
            se_db: report.se_db,
            gamma_percent: report.gamma_percent,
            trajectory: report
                .trajectory
                .as_ref()
                .filter(|_| with_trajectory)
                .map(|t| t.steps.iter().map(TrajectoryPointJson::from).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Preset;
    use chan_em_core::ChannelParams;

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = Preset::PaperTable1.config();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(Provenance::new("x", &a), Provenance::new("x", &b));
        b.master_seed += 1;
        assert_ne!(
            Provenance::new("x", &a).config_sha256,
            Provenance::new("x", &b).config_sha256
        );
        assert_eq!(Provenance::new("x", &a).config_sha256.len(), 64);
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -320.0, 1e-9, 0.7999999999999999, -1234.5678e10] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn report_json_omits_absent_fields() {
        let p = ChannelParams::new(0.5, 0.5).unwrap();
        let report = EstimateReport {
            estimate: p,
            start: p,
            iterations_run: 3,
            log_likelihood: -1.0,
            se_db: -320.0,
            gamma_percent: None,
            trajectory: None,
        };
        let text = serde_json::to_string(&EstimateReportJson::from_report(&report, true)).unwrap();
        assert!(!text.contains("gamma_percent") && !text.contains("trajectory"));
        assert!(text.contains("\"alpha_hat\":0.5"));
    }
}
