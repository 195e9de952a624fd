//! Command-line front end: `map`, `check`, `certify`, `solve`.
//!
//! Exit codes: 0 success, 1 hypothesis or certificate failure, 2 no
//! solutions, 3 invalid input (including unreadable configs and output
//! errors).

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::exec::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Failed = 1,
    NoSolutions = 2,
    InvalidInput = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Parser)]
#[command(name = "annulus-plap", version, about = "Radial p-Laplacian problems on annuli")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the coordinate table `r,t,q` and print the weight bounds.
    Map(CommonArgs),
    /// Check the oscillation and growth hypotheses.
    Check(CommonArgs),
    /// Emit the inequality certificates as JSON.
    Certify(CommonArgs),
    /// Compute solutions and export them.
    Solve(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Overrides `[output] dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Certify even when the hypotheses fail.
    #[arg(long)]
    pub force: bool,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Map(a) | Command::Check(a) | Command::Certify(a) | Command::Solve(a) => a,
        }
    }
}

/// Parses `argv` and runs the subcommand.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            if help {
                let _ = write!(stdout, "{e}");
                return ExitStatus::Success;
            }
            let _ = write!(stderr, "{e}");
            return ExitStatus::InvalidInput;
        }
    };
    let args = cli.command.args();
    if let Some(0) = args.threads {
        let _ = writeln!(stderr, "error: --threads must be positive");
        return ExitStatus::InvalidInput;
    }
    if let Err(e) = crate::exec::init_threads(args.threads) {
        let _ = writeln!(stderr, "warning: thread pool already configured: {e}");
    }
    let cfg = match config::load(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return ExitStatus::InvalidInput;
        }
    };
    let mut ctx = commands::Context {
        out_dir: args.out.clone().unwrap_or_else(|| cfg.output.dir.clone()),
        force: args.force,
        exec: Execution::default(),
        stdout,
    };
    let outcome = match &cli.command {
        Command::Map(_) => commands::cmd_map(&cfg, &mut ctx),
        Command::Check(_) => commands::cmd_check(&cfg, &mut ctx),
        Command::Certify(_) => commands::cmd_certify(&cfg, &mut ctx),
        Command::Solve(_) => commands::cmd_solve(&cfg, &mut ctx),
    };
    outcome.unwrap_or_else(|e| {
        let _ = writeln!(stderr, "error: {e}");
        ExitStatus::InvalidInput
    })
}
