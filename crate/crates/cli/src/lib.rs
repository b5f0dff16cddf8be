//! `merw-lab`: configuration-driven experiments over `merw-core`.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;

pub use config::{Cli, Command, ExperimentConfig, LimitCommand, Options, Settings, StatsCommand};
pub use error::{CliError, CliResult};
pub use output::OutputDir;

/// Result of one non-verify command.
pub struct Executed {
    pub dir: PathBuf,
    pub manifest: Vec<u8>,
    pub pass: bool,
    pub summary: String,
}

/// Runs one experiment command into its output directory.
pub fn execute(command: Command, s: &Settings) -> CliResult<Executed> {
    let name = command.name();
    let mut out = OutputDir::create(s.out_dir(&name))?;
    let outcome = match command {
        Command::Simulate => commands::simulate_cmd(s, &mut out)?,
        Command::Couple => commands::couple_cmd(s, &mut out)?,
        Command::Urn => commands::urn_cmd(s, &mut out)?,
        Command::Limit(l) => commands::limit_cmd(l, s, &mut out)?,
        Command::Stats(st) => commands::stats_cmd(st, s, &mut out)?,
        Command::Verify => return Err(CliError::Config("verify writes no output directory".into())),
    };
    let dir = out.root().to_path_buf();
    let config = serde_json::to_value(&outcome.config).expect("config serializes");
    let manifest = out.finish(&name, config)?;
    Ok(Executed { dir, manifest, pass: outcome.pass, summary: outcome.summary })
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    let command = cli.command;
    let s = cli.opts.resolve()?;
    if command == Command::Verify {
        let cfg = acceptance::AcceptanceConfig {
            seed: s.seed.unwrap_or(acceptance::DEFAULT_SEED),
            workers: s.workers,
            filter: s.filter.clone(),
        };
        let lines = acceptance::verify_all(&cfg, &mut std::io::stdout().lock())?;
        return Ok(if lines.iter().all(|l| l.pass) { 0 } else { 3 });
    }
    let done = execute(command, &s)?;
    println!("{}: {}", command.name(), done.summary);
    println!("wrote {}", done.dir.join(output::MANIFEST).display());
    if s.assert && !done.pass {
        return Err(CliError::Assert(done.summary));
    }
    Ok(0)
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("merw-lab: {e}");
            e.exit_code()
        }
    }
}
