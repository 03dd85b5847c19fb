//! flipkit: check, reverse, run and compress with the Flipper toolkit.

mod commands;
mod container;
mod selftest;

use clap::{Parser, Subcommand};
use commands::{Ctx, Failure};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "flipkit",
    version,
    about = "Toolkit for the Flipper reversible language",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Do not preload the standard library.
    #[arg(long, global = true)]
    no_stdlib: bool,
    /// Interpreter step budget.
    #[arg(long, global = true, value_name = "N")]
    step_budget: Option<u64>,
    /// Seed for randomised subcommands.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Print extra detail.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and check a program.
    Check {
        /// Source file (.flp).
        file: PathBuf,
    },
    /// Print the reversed form of a program or one definition.
    Reverse {
        file: PathBuf,
        /// Reverse only this definition.
        #[arg(long, value_name = "NAME")]
        def: Option<String>,
    },
    /// Apply a definition to a value, forward or backward.
    Run {
        file: PathBuf,
        /// Name of a parameter-free definition.
        def: String,
        /// Value literal, e.g. '(Left 3)' or '(1 , 2)'.
        value: String,
        /// Run right-to-left.
        #[arg(long)]
        backward: bool,
    },
    /// Compress a symbol stream with the bits-back coder.
    Compress {
        /// Input: raw bytes for 256-symbol models, whitespace-separated
        /// decimals otherwise.
        input: PathBuf,
        /// Model JSON; defaults to the built-in demo model.
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Decompress a container back to symbols.
    Decompress {
        input: PathBuf,
        /// Model JSON; must be the model the stream was compressed with.
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Exercise the toolkit against itself.
    Selftest {
        /// Cases per suite.
        #[arg(long, default_value_t = 200)]
        cases: u64,
        /// Also plant a constructor-swap bug and show it failing closed.
        #[arg(long)]
        mutate: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        no_stdlib: cli.no_stdlib,
        step_budget: cli.step_budget,
        seed: cli.seed.unwrap_or(0xf11b),
        verbose: cli.verbose,
    };
    let result = match &cli.cmd {
        Cmd::Check { file } => commands::check(&ctx, file),
        Cmd::Reverse { file, def } => commands::reverse(&ctx, file, def.as_deref()),
        Cmd::Run { file, def, value, backward } => {
            commands::run(&ctx, file, def, value, *backward)
        }
        Cmd::Compress { input, model, output } => {
            commands::compress(&ctx, input, model.as_deref(), output)
        }
        Cmd::Decompress { input, model, output } => {
            commands::decompress(&ctx, input, model.as_deref(), output)
        }
        Cmd::Selftest { cases, mutate } => {
            let opts = selftest::Options { cases: *cases, seed: ctx.seed, mutate: *mutate };
            if selftest::run(&opts) {
                Ok(())
            } else {
                Err(Failure::Domain("selftest failed".to_string()))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}
