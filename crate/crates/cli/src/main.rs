use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hardy_cli::{commands, exit, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "hardy", version, about = "Whitney, maximal-function and atomic-decomposition checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Whitney decomposition of the configured region (and nested statistics).
    Whitney(Flags),
    /// Atomic decomposition of the configured input function.
    Decompose(Flags),
    /// Uniform atom bounds and extension checks for the configured operators.
    OperatorHarness(Flags),
    /// The full acceptance suite.
    VerifyAll(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn load(flags: &Flags) -> Result<RunConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &flags.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

type Handler = fn(&RunConfig) -> Result<u8, CliError>;

fn run(cli: Cli) -> Result<u8, CliError> {
    let (flags, cmd): (&Flags, Handler) = match &cli.command {
        Command::Whitney(f) => (f, commands::cmd_whitney),
        Command::Decompose(f) => (f, commands::cmd_decompose),
        Command::OperatorHarness(f) => (f, commands::cmd_operator_harness),
        Command::VerifyAll(f) => (f, commands::cmd_verify_all),
    };
    let cfg = load(flags)?;
    if flags.print_config {
        print!("{}", cfg.resolved()?.to_toml());
        return Ok(exit::PASS);
    }
    cmd(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG } else { exit::PASS });
        }
    };
    match run(cli) {
        Ok(code) => {
            if code != exit::PASS {
                eprintln!("hardy: one or more checks failed");
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("hardy: {e}");
            ExitCode::from(e.code)
        }
    }
}
