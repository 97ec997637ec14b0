use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tasmaj::experiment::{cdf_check, compare_report, floor_report, run_sweep};
use tasmaj::{load_spec, ExperimentSpec, ZetaSet};

#[derive(Parser)]
#[command(name = "tasmaj", version, about = "Outage sweeps for majority-vote antenna selection in downlink NOMA")]
struct Cli {
    #[command(flatten)]
    global: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the Monte Carlo trial count per SNR point.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write CSV here instead of the experiment's `output` (or stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Mixture coefficient set: published or order-statistic.
    #[arg(long, global = true)]
    coefficients: Option<ZetaSet>,
}

#[derive(Subcommand)]
enum Command {
    /// Outage curves over the SNR grid.
    Sweep { spec: PathBuf },
    /// SNR gains between schemes at target outage levels.
    Compare {
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        op_levels: Vec<f64>,
    },
    /// Empirical against closed-form selected-gain CDFs.
    CdfCheck { spec: PathBuf },
    /// Error floors per user.
    Floor { spec: PathBuf },
}

impl Overrides {
    fn apply(&self, mut spec: ExperimentSpec) -> Result<ExperimentSpec> {
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(trials) = self.trials {
            spec.trials = trials;
        }
        if let Some(workers) = self.workers {
            spec.workers = workers;
        }
        if let Some(set) = self.coefficients {
            spec.coefficients = set;
        }
        if let Some(out) = &self.out {
            spec.output = Some(out.clone());
        }
        let problems = spec.problems();
        anyhow::ensure!(problems.is_empty(), "invalid settings:\n  - {}", problems.join("\n  - "));
        Ok(spec)
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentSpec> {
    let spec = load_spec(path).with_context(|| format!("loading {}", path.display()))?;
    overrides.apply(spec)
}

fn emit(spec: &ExperimentSpec, csv: &str) -> Result<()> {
    match &spec.output {
        Some(path) => fs::write(path, csv).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(csv.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (spec, csv) = match &cli.command {
        Command::Sweep { spec } => {
            let spec = load(spec, &cli.global)?;
            let csv = run_sweep(&spec)?;
            (spec, csv)
        }
        Command::Compare { spec, op_levels } => {
            let spec = load(spec, &cli.global)?;
            let csv = compare_report(&spec, op_levels)?;
            (spec, csv)
        }
        Command::CdfCheck { spec } => {
            let spec = load(spec, &cli.global)?;
            let csv = cdf_check(&spec)?;
            (spec, csv)
        }
        Command::Floor { spec } => {
            let spec = load(spec, &cli.global)?;
            let csv = floor_report(&spec)?;
            (spec, csv)
        }
    };
    emit(&spec, &csv)
}
