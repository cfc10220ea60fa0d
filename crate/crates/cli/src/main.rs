use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use pzf_harness::{metadata, parse_raw, preset, run_experiment, write_csv, ExperimentKind, RawConfig};

#[derive(Parser)]
#[command(
    name = "pzf",
    version,
    about = "Monte Carlo experiments for PZF relay beamforming"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sum-rate versus SNR.
    Sumrate(RunArgs),
    /// Symbol error rate versus SNR.
    Ser(RunArgs),
    /// Sum-rate versus number of users.
    SweepUsers(RunArgs),
    /// Sum-rate of broadcast schedules.
    ScheduleCompare(RunArgs),
    /// Sum-rate with one relay antenna fewer than users.
    ReducedCompare(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in figure configuration.
    #[arg(long, value_parser = pzf_harness::PRESETS)]
    preset: Option<String>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Channel draws per grid point, overriding the configuration.
    #[arg(long)]
    trials: Option<u64>,
    /// CSV destination; stdout when absent from both flag and configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::Sumrate(a) => (ExperimentKind::SumRateSweep, a),
            Command::Ser(a) => (ExperimentKind::SerSweep, a),
            Command::SweepUsers(a) => (ExperimentKind::UserCountSweep, a),
            Command::ScheduleCompare(a) => (ExperimentKind::SchedulingCompare, a),
            Command::ReducedCompare(a) => (ExperimentKind::ReducedAntennaCompare, a),
        }
    }
}

fn load(args: &RunArgs) -> Result<RawConfig> {
    let mut raw = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_raw(&text).with_context(|| format!("in {}", path.display()))?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => bail!("either --config or --preset is required"),
    };
    if let Some(seed) = args.seed {
        raw.seed = seed;
    }
    if let Some(trials) = args.trials {
        raw.trials = trials;
    }
    if let Some(out) = &args.out {
        raw.output = Some(out.clone());
    }
    Ok(raw)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.toml");
    PathBuf::from(name)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (kind, args) = Cli::parse().command.split();
    let raw = load(&args)?;
    if raw.experiment != kind {
        bail!(
            "configuration describes a `{}` experiment but `{}` was requested",
            raw.experiment.name(),
            kind.name()
        );
    }
    let spec = raw.validate()?;
    let rows = run_experiment(&spec)?;
    match &spec.output {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&rows, io::BufWriter::new(file))?;
            let meta = sidecar(path);
            fs::write(&meta, metadata(&spec)).with_context(|| format!("writing {}", meta.display()))?;
            info!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_csv(&rows, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}
