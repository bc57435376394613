use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use clonekit::harness::{self, ConfigFile, Experiment, ExperimentConfig, Format, Overrides, Status};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Tv,
    AmpLoss,
    Deficiency,
    CloneSim,
    MinimaxProbe,
    LanDiag,
    Coupling,
}

impl From<ExperimentArg> for Experiment {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::Tv => Experiment::Tv,
            ExperimentArg::AmpLoss => Experiment::AmpLoss,
            ExperimentArg::Deficiency => Experiment::Deficiency,
            ExperimentArg::CloneSim => Experiment::CloneSim,
            ExperimentArg::MinimaxProbe => Experiment::MinimaxProbe,
            ExperimentArg::LanDiag => Experiment::LanDiag,
            ExperimentArg::Coupling => Experiment::Coupling,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Reproducible cloning, amplification and deficiency experiments.
#[derive(Debug, Parser)]
#[command(name = "clonekit", version = harness::VERSION)]
struct Cli {
    experiment: ExperimentArg,
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors, before anything is written
    let cli = Cli::parse();
    let flags = Overrides {
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out,
        format: cli.format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
    };
    let run = ConfigFile::load(&cli.config)
        .and_then(|file| ExperimentConfig::resolve(cli.experiment.into(), file, flags))
        .and_then(|cfg| {
            let report = harness::run_experiment(&cfg)?;
            harness::write_report(&report, cfg.format, cfg.out.as_deref())?;
            Ok(report)
        });
    match run {
        Ok(report) if report.status == Status::Ok => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("clonekit: some results did not converge; report flagged partial");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("clonekit: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
