use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use popgen_cli::commands::{self, Cli, CliError, Command, Output, EXIT_USAGE};

fn emit(out: Output, path: Option<&std::path::Path>) -> Result<(), CliError> {
    if let Some(seed) = out.seed {
        eprintln!("seed: {seed}");
    }
    match path {
        Some(p) => std::fs::write(p, &out.bytes)?,
        None => std::io::stdout().lock().write_all(&out.bytes)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => emit(commands::simulate(a)?, a.output.as_deref()),
        Command::Batch(a) => emit(commands::batch(a)?, a.output.as_deref()),
        Command::Analyze(a) => emit(commands::analyze(a)?, a.output.as_deref()),
        Command::Export(a) => emit(commands::export(a)?, a.output.as_deref()),
        Command::Serve(a) => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(commands::serve(a))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE as u8),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == EXIT_USAGE {
                eprintln!("run 'popgen --help' for usage");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
