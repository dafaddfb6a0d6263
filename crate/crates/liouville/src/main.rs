use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use liouville::commands::{self, Direction};
use liouville::core::verify::Suite;
use liouville::{CliError, RunConfig, DEFAULT_CONFIG};

/// Cumulant-expansion solutions of the nonlinear Liouville hierarchy.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate g_n(t) on the configured grid and write CSV.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert between correlation and distribution functions and write CSV.
    Transform {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        direction: Direction,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run property checks, stream JSONL reports and print a summary to stderr.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "all", value_parser = parse_suite)]
        suite: Suite,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the bundled example configuration.
    DefaultConfig,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::parse(s).ok_or_else(|| {
        let names: Vec<_> = Suite::MEMBERS.iter().map(|m| m.name()).collect();
        format!("unknown suite {s:?}; expected all or one of {}", names.join(", "))
    })
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Worker count from `LIOUVILLE_THREADS`; 0 or unset means the default.
fn threads() -> Result<usize, CliError> {
    match std::env::var("LIOUVILLE_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Config(liouville::ConfigError {
                path: "LIOUVILLE_THREADS".into(),
                message: format!("not a thread count: {v:?}"),
            })
        }),
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> Result<usize, CliError> {
    match cli.command {
        Command::Evaluate { config, out } => {
            let cfg = RunConfig::load(&config)?;
            commands::evaluate(&cfg, &mut *output(out.as_deref())?)
        }
        Command::Transform { config, direction, out } => {
            let cfg = RunConfig::load(&config)?;
            commands::transform(&cfg, direction, &mut *output(out.as_deref())?)
        }
        Command::Verify { config, suite, report } => {
            let cfg = RunConfig::load(&config)?;
            let result = commands::verify(&cfg, suite, threads()?)?;
            commands::write_jsonl(&result.reports, &mut *output(report.as_deref())?)?;
            commands::write_summary(&result.reports, &mut io::stderr().lock())?;
            Ok(result.failures())
        }
        Command::DefaultConfig => {
            print!("{DEFAULT_CONFIG}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{failures} failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
