// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fluorsim_cli::{cmd_analyze, cmd_simulate, cmd_sweep, CliError, Overrides};

/// Transient-fluorescence simulator and analysis toolkit for a trapped Λ ion.
#[derive(Debug, Parser)]
#[command(name = "fluorsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunOverrides {
    /// Replace run.master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace run.repetitions.
    #[arg(long)]
    repetitions: Option<u64>,
    /// Replace run.bin_width_us, in nanoseconds.
    #[arg(long)]
    bin_width_ns: Option<f64>,
}

impl From<RunOverrides> for Overrides {
    fn from(o: RunOverrides) -> Self {
        Overrides { seed: o.seed, repetitions: o.repetitions, bin_width_ns: o.bin_width_ns }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the configured experiment and write trajectory, histograms and metadata.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Analyze histograms given as ROLE=PATH (roles: sp, dp, sp_ref, dp_ref).
    Analyze {
        #[arg(required = true)]
        inputs: Vec<String>,
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Run the configured intensity or detuning sweep.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result: Result<(), CliError> = match cli.command {
        Command::Simulate { config, out, overrides } => cmd_simulate(&config, &out, overrides.into()).map(drop),
        Command::Analyze { inputs, config, out, overrides } => cmd_analyze(&inputs, &config, &out, overrides.into()).map(drop),
        Command::Sweep { config, out, overrides } => cmd_sweep(&config, &out, overrides.into()).map(drop),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
