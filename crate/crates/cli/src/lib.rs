//! Command-line pipelines for weather-driven network resilience assessment.

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "gridshock", version, about = "Loss-of-service simulation for weather-exposed transport networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate each weather event (or cluster representative) under the chosen strategies.
    Assess(Overrides),
    /// Annual total loss of service per year, with a smoothed trend.
    Trend(Overrides),
    /// Compare climate, random and targeted failures event by event.
    Compare(Overrides),
    /// Cluster summer days and pick representatives.
    Cluster(Overrides),
}

/// Sizes the global worker pool from `GRIDSHOCK_THREADS` when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GRIDSHOCK_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("GRIDSHOCK_THREADS=`{v}` is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<Vec<std::path::PathBuf>> {
    match cli.command {
        Command::Assess(o) => commands::cmd_assess(&RunConfig::from_overrides(&o)?),
        Command::Trend(o) => commands::cmd_trend(&RunConfig::from_overrides(&o)?),
        Command::Compare(o) => commands::cmd_compare(&RunConfig::from_overrides(&o)?),
        Command::Cluster(o) => commands::cmd_cluster(&RunConfig::from_overrides(&o)?),
    }
}
