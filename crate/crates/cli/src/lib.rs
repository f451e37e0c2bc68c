//! Command-line front end: environment generation, dataset preparation,
//! experiment runs, sweeps and plots.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for failures while
//! running. Machine-readable summaries go to standard output and progress to
//! standard error.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Axis;
use crate::config::{Origin, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "conduel", version, about = "Conversational dueling bandit experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every subcommand that builds a [`RunConfig`].
#[derive(Debug, Default, Args)]
pub struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override any configuration key; repeatable and applied last.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory (default: $CONDUEL_OUT_DIR, else `results`).
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (default: one per processor).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Comma-separated algorithm tags.
    #[arg(long)]
    pub algorithms: Option<String>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Seed range `a-b` or comma-separated list.
    #[arg(long)]
    pub seeds: Option<String>,
    /// `none`, `linear:N`, `log:N` or `prop:B`.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Environment file; a synthetic environment is generated when absent.
    #[arg(long, value_name = "FILE")]
    pub env: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic environment file.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Destination (default: <out-dir>/env.json).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build an environment file from tag-assignment dataset files.
    Prep {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Destination (default: <out-dir>/env.json).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every configured algorithm and write regret CSVs.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run over a grid of conversation frequencies or dimensions.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values (default: 1,5,10,20 or 20,30,40,50).
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
    },
    /// Render regret CSVs as an SVG line chart.
    Plot {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value = "Cumulative regret")]
        title: String,
    },
}

impl Common {
    /// Defaults, then the environment, then the file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::from_env();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flag = Origin::Flag;
        let strings = [
            ("algorithms", self.algorithms.clone()),
            ("horizon", self.horizon.map(|v| v.to_string())),
            ("seeds", self.seeds.clone()),
            ("schedule", self.schedule.clone()),
            ("workers", self.workers.map(|v| v.to_string())),
            ("out_dir", self.out_dir.as_ref().map(|p| p.display().to_string())),
            ("env", self.env.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in strings {
            if let Some(v) = value {
                cfg.set(key, &v, &flag)?;
            }
        }
        for pair in &self.set {
            cfg.apply_override(pair)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { common, output } => commands::synth(&common.resolve()?, output, stdout),
        Command::Prep { paths, common, output } => commands::prep(&common.resolve()?, &paths, output, stdout, stderr),
        Command::Run { common } => commands::run(&common.resolve()?, stdout, stderr),
        Command::Sweep { common, axis, values } => commands::sweep(&common.resolve()?, axis, values, stdout, stderr),
        Command::Plot { inputs, output, title } => commands::plot(&inputs, &output, &title, stdout),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
