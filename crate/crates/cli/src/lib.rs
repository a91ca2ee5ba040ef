//! Command-line front end for the tree-health pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 completed with
//! per-capture failures.

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Clean,
    /// The run finished but some captures failed; see the manifest.
    Partial,
}

#[derive(Debug, Parser)]
#[command(
    name = "greenscan",
    version,
    about = "Tree-health indexes from paired multispectral and thermal captures"
)]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Process a directory of capture triplets into per-tree results.
    Process(commands::process::ProcessArgs),
    /// Compare results against a ground-truth inventory.
    Validate(commands::validate::ValidateArgs),
    /// Score predicted label rasters against truth rasters (mask AP).
    EvalSeg(commands::eval_seg::EvalSegArgs),
    /// Generate synthetic capture datasets with known truth.
    Synth(commands::synth::SynthArgs),
    /// Flag low-NDVI trees for attention.
    Flag(commands::flag::FlagArgs),
}

/// Parses `args` and runs the selected subcommand, returning the process
/// exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };

    let config_path = cli.config.as_deref();
    let outcome = match &cli.command {
        Command::Process(a) => commands::process::run(a, config_path),
        Command::Validate(a) => commands::validate::run(a, config_path),
        Command::EvalSeg(a) => commands::eval_seg::run(a),
        Command::Synth(a) => commands::synth::run(a, config_path),
        Command::Flag(a) => commands::flag::run(a, config_path),
    };
    match outcome {
        Ok(RunStatus::Clean) => EXIT_OK,
        Ok(RunStatus::Partial) => EXIT_PARTIAL,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_from(["greenscan", "no-such-command"]), EXIT_USAGE);
        assert_eq!(
            run_from(["greenscan", "process"]),
            EXIT_USAGE,
            "missing required flags"
        );
        assert_eq!(
            run_from([
                "greenscan",
                "process",
                "--input",
                "x",
                "--out",
                "y",
                "--zoom",
                "abc"
            ]),
            EXIT_USAGE,
            "unparseable value"
        );
    }

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(run_from(["greenscan", "--help"]), EXIT_OK);
        assert_eq!(run_from(["greenscan", "--version"]), EXIT_OK);
        assert_eq!(run_from(["greenscan", "process", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_input_directory_is_a_data_error() {
        assert_eq!(
            run_from([
                "greenscan",
                "process",
                "--input",
                "/nonexistent-dir-for-test",
                "--out",
                "/tmp/greenscan-test-out"
            ]),
            EXIT_DATA
        );
    }
}
