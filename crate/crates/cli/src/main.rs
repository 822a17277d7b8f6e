use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ringqfi_cli::{emit, run, Command, Config, Format};

#[derive(Parser)]
#[command(name = "ringqfi", version, about = "Quantum Fisher information of ring resonator absorption sensors")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Scenario file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; defaults to the `output` key, then stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Per-photon QFI over a grid of r, phi or alpha_A.
    Sweep,
    /// Ring against single-pass probes over an absorption range.
    Compare,
    /// Absorption above which the critically coupled ring beats any single pass.
    Breakeven,
    /// Numerical QFI maximization over ring and probe settings.
    Optimize,
    /// Monte Carlo check of the intensity estimator.
    Mc,
    /// Critical coupling, MZI phases and photon budget for a target precision.
    Design,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Sweep => Command::Sweep,
            Cmd::Compare => Command::Compare,
            Cmd::Breakeven => Command::Breakeven,
            Cmd::Optimize => Command::Optimize,
            Cmd::Mc => Command::Mc,
            Cmd::Design => Command::Design,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config.as_deref() else {
        eprintln!("config error: --config <path> is required");
        return ExitCode::from(2);
    };
    let result = Config::load(path).and_then(|config| {
        let report = run(cli.command.into(), &config, cli.seed)?;
        let out = cli.out.clone().or_else(|| config.output.as_ref().map(PathBuf::from));
        emit(&report.table, cli.format, out.as_deref())?;
        Ok(report)
    });
    match result {
        Ok(report) => match report.failure {
            Some(msg) => {
                eprintln!("numerical failure: {msg}");
                ExitCode::from(3)
            }
            None => ExitCode::SUCCESS,
        },
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
