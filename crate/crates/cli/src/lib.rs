//! Scenario files, subcommands and table output for the `ringqfi` binary.

pub mod commands;
pub mod config;
pub mod output;

use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub use commands::Report;
pub use config::Config;
pub use output::{Cell, Format, Table};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Compare,
    Breakeven,
    Optimize,
    Mc,
    Design,
}

pub fn run(command: Command, config: &Config, seed: Option<u64>) -> Result<Report, CliError> {
    match command {
        Command::Sweep => commands::sweep(config),
        Command::Compare => commands::compare(config),
        Command::Breakeven => commands::breakeven(config),
        Command::Optimize => commands::optimize(config),
        Command::Mc => commands::mc(config, seed),
        Command::Design => commands::design(config),
    }
}

/// Writes `table` to `path`, or to stdout when `path` is `None`.
pub fn emit(table: &Table, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match path {
        Some(p) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(p).map_err(io)?);
            table.write(format, &mut file).and_then(|_| file.flush()).map_err(io)
        }
        None => match table.write(format, &mut std::io::stdout().lock()) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(io),
        },
    }
}
