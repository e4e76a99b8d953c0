use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elliptic_cli::{emit_report, run_config, Format, Mode, Overrides};

#[derive(Parser)]
#[command(name = "elliptic", version, about = "Solve and verify elliptic inclusions A*aA ∋ (u, f)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and run the checks it lists.
    Solve(RunArgs),
    /// Solve and run the listed checks, or a default verification set.
    Verify(RunArgs),
    /// Solve and compare against an independent reference solver.
    OracleCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `solver.tol`.
    #[arg(long)]
    tol: Option<f64>,
    /// Overrides `solver.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Solve(a) => (Mode::Solve, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::OracleCheck(a) => (Mode::OracleCheck, a),
    };
    let overrides = Overrides { tol: args.tol, seed: args.seed };
    let report = run_config(&args.config, overrides, mode);
    let format = match args.format {
        OutputFormat::Json => Format::Json,
        OutputFormat::Text => Format::Text,
    };
    let out = emit_report(&report, format);
    match &args.report {
        Some(path) => {
            if let Err(e) = fs::write(path, &out) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{out}"),
    }
    if let Some(e) = &report.error {
        eprintln!("error [{}]: {}", e.code, e.message);
    }
    ExitCode::from(report.exit_code() as u8)
}
