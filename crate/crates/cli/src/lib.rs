//! Command-line harness for Markov channel experiments: mixing, rate estimation,
//! ordering checks and parameter sweeps, with CSV and SVG output.
//!
//! Exit codes: 0 success, 1 a VIOLATED verdict was found, 2 configuration or
//! validation error.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{Artifacts, Io, Outcome};
use config::{ExperimentConfig, MuGridSpec, Resolved, SweepParam, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "markov-order", version, about = "Markov channel mixing and information-rate ordering experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; they override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Block length per Monte Carlo trial.
    #[arg(long, global = true, value_name = "INT")]
    pub n: Option<usize>,
    #[arg(long, global = true, value_name = "INT")]
    pub trials: Option<usize>,
    /// Worker threads; affects wall clock only.
    #[arg(long, global = true, value_name = "INT")]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// P(X = 1) for the iid input.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Mix two channels and print the result's definition.
    Mix {
        channel1: PathBuf,
        channel2: PathBuf,
        #[arg(long)]
        mu12: f64,
        #[arg(long)]
        mu21: f64,
    },
    /// Estimate the information rate of a channel.
    Mi {
        #[arg(long)]
        channel: Option<PathBuf>,
    },
    /// Check the mixing ordering over a grid of jump probabilities.
    Order {
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long)]
        recipe: Option<PathBuf>,
        /// `0.1,0.3,0.5` (squared), `0.1:0.5:3` (linspace, squared) or `0.1/0.2;0.3/0.4`.
        #[arg(long)]
        mu_grid: Option<String>,
    },
    /// Compare exact block information with the estimated rate.
    Lemma1 {
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Estimate rates along one recipe parameter.
    Sweep {
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long)]
        recipe: Option<PathBuf>,
        #[arg(long)]
        param: Option<SweepParam>,
        /// Comma-separated axis values.
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
    },
    /// Print the steady state and regularity of a channel.
    SteadyState {
        channel: PathBuf,
        /// Also report the d-step deviation from the steady state.
        #[arg(long, value_name = "D")]
        deviation: Option<u32>,
    },
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| anyhow::anyhow!("InvalidArgument: bad value {s:?}: {e}")))
        .collect()
}

impl Cli {
    /// Merges flags over the config file; flags win.
    pub fn experiment_config(&self) -> Result<ExperimentConfig> {
        let c = &self.common;
        let mut flags = ExperimentConfig {
            q: c.q,
            n: c.n,
            trials: c.trials,
            seed: c.seed,
            out: c.out.clone(),
            workers: c.workers,
            ..Default::default()
        };
        let file = match &c.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        match &self.command {
            Command::Mi { channel } => flags.channel = channel.clone(),
            Command::Order {
                channel,
                recipe,
                mu_grid,
            } => {
                flags.channel = channel.clone();
                flags.recipe = recipe.clone();
                flags.mu_grid = mu_grid.as_deref().map(MuGridSpec::parse).transpose()?;
            }
            Command::Lemma1 { channel, k_max } => {
                flags.channel = channel.clone();
                flags.k_max = *k_max;
            }
            Command::Sweep {
                channel,
                recipe,
                param,
                values,
            } => {
                flags.channel = channel.clone();
                flags.recipe = recipe.clone();
                let values = values.as_deref().map(parse_values).transpose()?;
                flags.sweep = match (param, values, &file.sweep) {
                    (None, None, _) => None,
                    (Some(p), Some(v), _) => Some(SweepSpec { param: *p, values: v }),
                    (Some(p), None, Some(f)) => Some(SweepSpec {
                        param: *p,
                        values: f.values.clone(),
                    }),
                    (None, Some(v), Some(f)) => Some(SweepSpec {
                        param: f.param,
                        values: v,
                    }),
                    (Some(p), None, None) => Some(SweepSpec {
                        param: *p,
                        values: Vec::new(),
                    }),
                    (None, Some(_), None) => {
                        anyhow::bail!("InvalidArgument: --values needs --param or a config sweep")
                    }
                };
            }
            Command::Mix { .. } | Command::SteadyState { .. } => {}
        }
        Ok(flags.or(file))
    }
}

/// Runs one parsed invocation. Errors map to exit code 2.
pub fn run(cli: &Cli, io: &mut Io<'_>) -> Result<Outcome> {
    match &cli.command {
        Command::Mix {
            channel1,
            channel2,
            mu12,
            mu21,
        } => commands::cmd_mix(channel1, channel2, *mu12, *mu21, io),
        Command::SteadyState { channel, deviation } => {
            commands::cmd_steady_state(channel, *deviation, io)
        }
        command => {
            let cfg = cli.experiment_config()?;
            let out_given = cfg.out.is_some();
            let resolved = Resolved::from_config(cfg)?;
            let (outcome, _) = match command {
                Command::Mi { .. } => commands::cmd_mi(&resolved, out_given, io)?,
                Command::Order { .. } => commands::cmd_order(&resolved, io)?,
                Command::Lemma1 { .. } => commands::cmd_lemma1(&resolved, io)?,
                Command::Sweep { .. } => commands::cmd_sweep(&resolved, io)?,
                Command::Mix { .. } | Command::SteadyState { .. } => unreachable!(),
            };
            Ok(outcome)
        }
    }
}
