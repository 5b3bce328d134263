use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use chan_em::{run_command, Command, ExperimentConfig, HarnessError, Preset, RunOptions};
use clap::Parser;

/// Estimate two-state channel parameters from gapped observations and
/// reproduce the reference experiments.
#[derive(Debug, Parser)]
#[command(name = "chan-em", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// JSON experiment config.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in experiment instead of a config file.
    #[arg(long, value_enum)]
    preset: Option<Preset>,

    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Overrides `observed_slots` (e.g. 1000000 for the full-scale runs).
    #[arg(long)]
    observed_slots: Option<usize>,

    /// `simulate` also writes the complete slot sequence.
    #[arg(long)]
    write_sequence: bool,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match (&cli.config, cli.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            ExperimentConfig::from_json(&text)?
        }
        (None, Some(preset)) => preset.config(),
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(k) = cli.observed_slots {
        config.observed_slots = k;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let options = RunOptions {
        write_sequence: cli.write_sequence,
    };
    match load(&cli).and_then(|config| run_command(cli.command, &config, options)) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("chan-em: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
