use std::path::{Path, PathBuf};
use std::process::ExitCode;

use carbon_forecast_cli::{with_jobs, CliResult, Config, Run};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "carbon-forecast", version, about = "Carbon price forecasting pipeline")]
struct Cli {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Run directory.
    #[arg(long, global = true, default_value = "run")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate a synthetic bundle under <out>/data.
    Synth,
    /// Validate the input bundle and summarise its series.
    Ingest,
    /// Disaggregate annual emissions to months.
    Interpolate,
    /// Full-sample principal-component factors.
    Factors,
    /// Expanding-window forecasts.
    Backtest,
    /// Scores and predictive-ability tests from backtest records.
    Score,
    /// Price and demand pressure indices.
    Monitor,
    /// Score tables with best-model flags.
    Report,
    /// Every stage plus a manifest.
    Run,
}

fn execute(cli: &Cli) -> CliResult<()> {
    let (mut config, base) = match &cli.config {
        Some(p) => (Config::load(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (Config::default(), PathBuf::from(".")),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let run = Run::new(config, base, &cli.out)?;
    let command = cli.command;
    with_jobs(cli.jobs, || -> CliResult<()> {
        let files = match command {
            Command::Synth => run.synth()?,
            Command::Ingest => run.ingest(&run.bundle()?)?,
            Command::Interpolate => run.interpolate(&run.bundle()?)?,
            Command::Factors => run.factors(&run.bundle()?)?,
            Command::Backtest => run.backtest(&run.bundle()?)?,
            Command::Score => run.score()?,
            Command::Monitor => run.monitor(&run.bundle()?)?,
            Command::Report => run.report()?,
            Command::Run => {
                let m = run.run_all()?;
                println!("manifest {}", m.hash);
                m.outputs.keys().cloned().collect()
            }
        };
        for f in files {
            log::info!("wrote {}", run.path(&f).display());
        }
        Ok(())
    })?
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
