use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use adiabatic_cli::{run, CliError, Command, Format, RunConfig};
use clap::Parser;

/// Verify adiabatic runtime bounds and instrument their proof.
#[derive(Debug, Parser)]
#[command(name = "adiabatic", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format; json for verify and proof-check, csv otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed of a random instance, replacing the one in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(args: &Args) -> Result<u8, CliError> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    let format = args.format.unwrap_or(args.command.default_format());
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Output(e.to_string()))?;
    let outcome = pool.install(|| run(args.command, &config, format))?;
    match &args.out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(outcome.text.as_bytes())
            .map_err(|e| CliError::Output(e.to_string()))?,
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("adiabatic: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
