//! `sca`: build cultural profiles, run economic-game sweeps against them,
//! analyse the resulting count tables and serve the endowment-session API.

pub mod commands;
pub mod config;
pub mod golden;
pub mod mock;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::{AnalyzeArgs, FixturesArgs, ProfileArgs, RunArgs, ServeArgs};
use config::Settings;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "sca", version, about = "Synthetic cultural agents: profiles, economic-game sweeps and their statistics")]
pub struct Cli {
    /// Key/value settings file (also SCA_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a cultural profile for one tribe.
    Profile(ProfileArgs),
    /// Run a game sweep for one or more agents.
    Run(RunArgs),
    /// Run statistical tests on a count table.
    Analyze(AnalyzeArgs),
    /// Serve the endowment-session HTTP API.
    Serve(ServeArgs),
    /// Write the bundled published tables and transcript.
    Fixtures(FixturesArgs),
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    let _ = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level)
        .with_target(false)
        .try_init();
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{rendered}") } else { write!(out, "{rendered}") };
            return e.exit_code();
        }
    };
    init_logging(cli.verbose);
    let result = Settings::load(
        cli.config.clone().or_else(|| std::env::var_os("SCA_CONFIG").map(PathBuf::from)).as_deref(),
        std::env::vars(),
    )
    .and_then(|settings| {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .map_err(CliError::runtime)?;
        runtime.block_on(commands::dispatch(cli.command, &settings, out, err))
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
