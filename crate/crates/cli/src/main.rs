mod commands;
mod config;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use config::{Cli, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(lmg_core::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<lmg_core::Error> for CliError {
    fn from(e: lmg_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

const PARTIAL: u8 = 3;

fn run(cfg: RunConfig) -> Result<u8, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let table = pool.install(|| commands::run(&cfg))?;
    let text = output::render(&cfg, &table);
    output::emit(cfg.out.as_deref(), &text)?;
    if table.failed > 0 {
        eprintln!(
            "lmg {}: {} cell(s) or point(s) failed; see the diagnostics in the output",
            cfg.command.name(),
            table.failed
        );
        return Ok(PARTIAL);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = RunConfig::resolve(cli).and_then(run);
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("lmg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
