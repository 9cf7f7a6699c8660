use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use fbns_cli::{run, Command, Overrides};

#[derive(Debug, Parser)]
#[command(name = "fbns", version, about = "Fuzzy BN-S pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON). Required.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Risk attitude in [0, 1] for the working fuzzy price.
    #[arg(long, global = true)]
    eta: Option<f64>,

    /// Jump threshold K in percent; repeat for several.
    #[arg(long = "threshold", global = true)]
    thresholds: Vec<f64>,
}

fn main() -> ExitCode {
    // Usage errors count as validation failures (exit 1), not clap's 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let Some(config) = cli.config else {
        let _ = Cli::command()
            .error(ErrorKind::MissingRequiredArgument, "--config <CONFIG> is required")
            .print();
        return ExitCode::from(1);
    };
    let overrides = Overrides {
        out: cli.out,
        seed: cli.seed,
        eta: cli.eta,
        thresholds: cli.thresholds,
    };
    match run(cli.command, &config, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
