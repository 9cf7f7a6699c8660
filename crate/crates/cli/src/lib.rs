//! Batch pipeline over the fuzzy BN-S toolkit: ingest bars, describe them,
//! label big-jump windows, train the regime classifier and simulate.
//!
//! Every subcommand writes flat files into one run directory and records
//! their digests and inputs in `manifest.json`.

// `!(x > 0.0)` is how parameter checks reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::Path;

use clap::Subcommand;

pub use commands::Session;
pub use config::{Overrides, RunConfig};
pub use error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse bars and build the fuzzy-price series.
    Ingest,
    /// Descriptive statistics of fuzzy prices and their changes.
    Stats,
    /// Plot-ready tables: monthly boxes, histograms, realized volatility.
    Plotdata,
    /// Big-jump counts per threshold and split.
    Jumps,
    /// Windowed dataset with lookahead labels.
    Label,
    /// Train one classifier per split, report, and estimate theta.
    Train,
    /// Simulate paths and correlation tables.
    Simulate,
    /// Everything above, in order.
    Pipeline,
}

pub fn run(command: Command, config_path: &Path, overrides: &Overrides) -> CliResult<()> {
    let loaded = RunConfig::load(config_path, overrides)?;
    let mut s = Session::open(&loaded)?;
    match command {
        Command::Ingest => s.ingest(),
        Command::Stats => s.stats(),
        Command::Plotdata => s.plotdata(),
        Command::Jumps => s.jumps(),
        Command::Label => s.label(),
        Command::Train => s.train(),
        Command::Simulate => s.simulate(),
        Command::Pipeline => {
            s.ingest()?;
            s.stats()?;
            s.plotdata()?;
            s.jumps()?;
            s.label()?;
            s.train()?;
            s.simulate()
        }
    }
}
