use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use roughness_cli::config::FileConfig;
use roughness_cli::{load_config, run, CliError, Command, OutputFormat, Overrides, RunConfig};

/// Precision limits for the mean height and roughness of axially displaced
/// point sources.
#[derive(Debug, Parser)]
#[command(name = "roughness", version)]
struct Args {
    command: Command,
    /// JSON config file, or `-` for stdin.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for simulations; results do not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
}

fn execute(args: Args) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let flags = Overrides { seed: args.seed, format: args.format };
    let config = RunConfig::resolve(args.command, file, flags)?;
    let output = run(&config, args.threads.map(|n| n as usize))?;
    if let Some(line) = &output.summary {
        eprintln!("{line}");
    }
    match &args.out {
        Some(path) => std::fs::write(path, &output.body)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", output.body),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
