mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, Extra, RunError};
use config::{ConfigError, Format};

#[derive(Parser, Debug)]
#[command(name = "covering", version, about = "Covering bounds, rate regions and simulation for weakly typical sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output format; overrides `format` in the config.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,

    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo trials; overrides `trials` in the config.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report entropies and rates in bits, and read `R` in bits.
    #[arg(long, global = true)]
    bits: bool,

    /// Worker threads for simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entropies and conditional entropies of the joint law.
    Entropy,
    /// Lower and upper bounds on the probability that no tuple is in the event.
    Bounds,
    /// Rate-region thresholds, checks and grid scans.
    Rates,
    /// Chernoff exponents for atypicality.
    Exponent,
    /// Monte Carlo estimate of the covering probability.
    Simulate {
        /// Write the instance of one trial (first block length) here.
        #[arg(long)]
        snapshot_out: Option<PathBuf>,
        /// Trial whose instance `--snapshot-out` writes.
        #[arg(long, default_value_t = 0)]
        snapshot_trial: u64,
        /// Search a saved instance instead of simulating.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Exact probability that no tuple is in the event, by enumeration.
    Oracle,
    /// Checks that the generator's codewords are conditionally independent.
    Audit,
}

fn load(cli: &Cli) -> Result<config::Config, RunError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ConfigError::new("--config", "a configuration file is required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
    let mut cfg = config::parse(&text)?;
    if let Some(f) = &cli.format {
        cfg.format = Some(if f == "json" { Format::Json } else { Format::Csv });
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.trials.is_some() {
        cfg.trials = cli.trials;
    }
    if cli.bits {
        cfg.bits = Some(true);
    }
    Ok(cfg.resolve()?)
}

fn run(cli: &Cli) -> Result<(), RunError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(ConfigError::new("--threads", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| ConfigError::new("--threads", e.to_string()))?;
    }
    let cfg = load(cli)?;
    let ctx = Ctx::new(&cfg)?;
    let report = match &cli.command {
        Command::Entropy => commands::entropy(&ctx)?,
        Command::Bounds => commands::bounds(&ctx)?,
        Command::Rates => commands::rates(&ctx)?,
        Command::Exponent => commands::exponent(&ctx)?,
        Command::Simulate {
            snapshot_out,
            snapshot_trial,
            replay,
        } => commands::simulate(
            &ctx,
            &Extra {
                snapshot_out: snapshot_out.clone(),
                snapshot_trial: *snapshot_trial,
                replay: replay.clone(),
            },
        )?,
        Command::Oracle => commands::oracle(&ctx)?,
        Command::Audit => commands::audit(&ctx)?,
    };
    let echo = output::to_value(&cfg);
    let text = match cfg.format.expect("resolved") {
        Format::Csv => output::render_csv(&echo, &report),
        Format::Json => output::render_json(&echo, &report),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| ConfigError::new("--out", e.to_string()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| ConfigError::new("--out", e.to_string()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
