//! `riskwave` command-line front end.

mod commands;
mod error;
mod output;
mod settings;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{Method, StatsOptions, TraceOptions, TuneOptions};
use crate::error::CliError;
use crate::settings::{read_config, resolve, Settings};

#[derive(Parser)]
#[command(name = "riskwave", version, about = "Investment strategies against noisy periodic returns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Budget curves for each strategy at one noise level.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Final budgets over a grid of noise levels.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Noise levels, comma separated, each in (0, 1).
        #[arg(long, value_delimiter = ',')]
        sigmas: Vec<f64>,
    },
    /// Return histograms, mean |r| and consecutive-product statistics.
    Stats {
        #[command(flatten)]
        common: Common,
        /// Noise levels for the histograms; defaults to 0.1,0.5,0.9.
        #[arg(long, value_delimiter = ',')]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = riskwave::analysis::DEFAULT_BINS)]
        bins: usize,
    },
    /// Search strategy parameters.
    Tune {
        #[command(flatten)]
        common: Common,
        /// ma, mls, iur or ga.
        #[arg(long)]
        family: String,
        /// Axis as name=v1,v2,... or name=lo..hi; repeatable.
        #[arg(long)]
        grid: Vec<String>,
        #[arg(long, value_enum, default_value_t = MethodArg::Grid)]
        method: MethodArg,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
    },
    /// Returns and GA risk propensity in a window ending at --at.
    GaTrace {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        at: u64,
        #[arg(long, default_value_t = 200)]
        window: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Grid,
    Hill,
}

#[derive(Args)]
struct Common {
    /// key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    sigma1: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    /// Strategy to run (q0, ma, mls, iur, ga, sw); repeatable.
    #[arg(long)]
    strategy: Vec<String>,
    /// rs or ra.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    period: Option<u32>,
    /// amplitude or phase.
    #[arg(long)]
    noise: Option<String>,
}

impl Common {
    fn settings(&self) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        let mut flags = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                flags.insert(k.to_string(), v);
            }
        };
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("trials", self.trials.map(|v| v.to_string()));
        put("t_max", self.steps.map(|v| v.to_string()));
        put("sigma1", self.sigma1.map(|v| v.to_string()));
        put("sigma2", self.sigma2.map(|v| v.to_string()));
        put("mode", self.mode.clone());
        put("period", self.period.map(|v| v.to_string()));
        put("noise", self.noise.clone());
        if !self.strategy.is_empty() {
            put("strategies", Some(self.strategy.join(",")));
        }
        resolve(file, |k| std::env::var(k).ok(), flags)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common } => commands::simulate(&common.settings()?),
        Command::Sweep { common, sigmas } => {
            let sigmas = if sigmas.is_empty() { commands::default_sigmas() } else { sigmas };
            commands::sweep(&common.settings()?, &sigmas)
        }
        Command::Stats {
            common,
            sigmas,
            samples,
            bins,
        } => {
            let sigmas = if sigmas.is_empty() { vec![0.1, 0.5, 0.9] } else { sigmas };
            commands::stats(&common.settings()?, &StatsOptions { sigmas, samples, bins })
        }
        Command::Tune {
            common,
            family,
            grid,
            method,
            restarts,
        } => {
            let method = match method {
                MethodArg::Grid => Method::Grid,
                MethodArg::Hill => Method::Hill,
            };
            commands::tune(
                &common.settings()?,
                &TuneOptions {
                    family,
                    grid,
                    method,
                    restarts,
                },
            )
        }
        Command::GaTrace { common, at, window } => commands::ga_trace(&common.settings()?, &TraceOptions { at, window }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riskwave: {e}");
            e.exit_code()
        }
    }
}
