// SPDX-License-Identifier: Apache-2.0 OR MIT
//! `macpp` command line front end.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Config;

#[derive(Parser, Debug)]
#[command(name = "macpp", version, about = "Periodic Macdonald plane partitions: exact moments, sampling, limit shapes and fluctuations")]
pub struct Cli {
    /// JSON run configuration (defaults are used for missing sections).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for CSV/SVG/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Numerical tolerance override (quadrature target or pass threshold).
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// RNG seed for sampling.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check membership of the back wall in its admissible class.
    Validate,
    /// Discretize the limiting wall at mesh ε.
    Discretize {
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Exact ℘_k moments by contour integration (with an enumeration check).
    Moments,
    /// Run Markov chains and report observable statistics.
    Sample,
    /// Liquid region, height function and lozenge proportions on a grid.
    LimitShape,
    /// Parametrized frozen boundary, cusps and tentacles.
    FrozenBoundary,
    /// Limiting covariance matrix of ℘ observables.
    Covariance,
    /// Cross-check the two weight definitions by enumeration.
    Oracle {
        /// Support as NxM or NxM/mu1,mu2,…
        #[arg(long)]
        support: Option<String>,
        #[arg(long, default_value_t = 3)]
        cap: u32,
    },
    /// Frozen-boundary figures for the three-kink and single-piece walls.
    Figures {
        #[arg(long, value_enum, default_value_t = Which::All)]
        which: Which,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    /// Three singular kinks.
    Fb1,
    /// Single linear piece.
    Fb2,
    All,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Discretize { .. } => "discretize",
            Command::Moments => "moments",
            Command::Sample => "sample",
            Command::LimitShape => "limit-shape",
            Command::FrozenBoundary => "frozen-boundary",
            Command::Covariance => "covariance",
            Command::Oracle { .. } => "oracle",
            Command::Figures { .. } => "figures",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    };
    let result = config.and_then(|cfg| macpp::par::with_threads(cli.threads, || commands::run(&cli, &cfg)));
    match result {
        Ok(outcome) => {
            for p in &outcome.written {
                println!("wrote {}", p.display());
            }
            println!("{}", outcome.summary);
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
