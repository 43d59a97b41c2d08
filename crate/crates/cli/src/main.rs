//! `lumikit`: presets, augmentation, loss checks, evaluation, user-study
//! scaling and the embedding probe from one binary.
//!
//! Exit codes: 0 on success, 1 on a usage or validation error (including a
//! failed check), 2 when a file could not be read or written.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use config::ToolConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(lumikit_core::Error),
}

impl From<lumikit_core::Error> for CliError {
    fn from(e: lumikit_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_io() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lumikit", about = "Illuminant presets, relighting, loss checks, evaluation and embedding probes")]
struct Cli {
    /// JSON file overriding the built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print a machine-readable JSON result on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for batch commands (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chromaticity and green-normalized gains of a blackbody or preset.
    Planck(commands::PlanckArgs),
    /// Relit variants, mask, edge map and manifest for one source image.
    Augment(commands::AugmentArgs),
    /// Canny edge map of one image.
    Edges(commands::EdgesArgs),
    /// Gradient check and lambda sweep of the masked loss, or one evaluation on tensor files.
    LossCheck(commands::LossCheckArgs),
    /// White-balance a manifest's images and score the recovered illuminants.
    Evaluate(commands::EvaluateArgs),
    /// Thurstone Case V scales from paired preference counts.
    Study(commands::StudyArgs),
    /// PCA and silhouette scores for exported text embeddings.
    Probe(commands::ProbeArgs),
}

/// What every command hands back: a JSON value and its human rendering.
pub struct Outcome {
    pub command: &'static str,
    pub result: serde_json::Value,
    pub text: String,
    /// Set when a check ran to completion but did not pass (exit 1).
    pub failure: Option<String>,
}

impl Outcome {
    pub fn new(command: &'static str, result: &impl Serialize, text: String) -> Self {
        Self { command, result: serde_json::to_value(result).expect("results serialize"), text, failure: None }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'a str,
    config: &'a ToolConfig,
    result: &'a serde_json::Value,
}

fn run(cli: Cli) -> Result<(ToolConfig, Outcome), CliError> {
    let config = match &cli.config {
        Some(p) => ToolConfig::load(p)?,
        None => ToolConfig::default(),
    };
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let ctx = commands::Context { config: &config, threads: cli.threads };
    let outcome = match cli.command {
        Command::Planck(a) => commands::planck(&ctx, a),
        Command::Augment(a) => commands::augment(&ctx, a),
        Command::Edges(a) => commands::edges(&ctx, a),
        Command::LossCheck(a) => commands::loss_check(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::Study(a) => commands::study(&ctx, a),
        Command::Probe(a) => commands::probe(&ctx, a),
    }?;
    Ok((config, outcome))
}

fn print(json: bool, config: &ToolConfig, outcome: &Outcome) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    // A closed pipe (`lumikit ... | head`) is not an error worth reporting.
    let _ = if json {
        let env = Envelope { command: outcome.command, config, result: &outcome.result };
        writeln!(out, "{}", serde_json::to_string_pretty(&env).expect("envelope serializes"))
    } else {
        out.write_all(outcome.text.as_bytes())
    };
}

fn main() -> ExitCode {
    let version =
        format!("{} (CIE 1931 table sha256 {})", env!("CARGO_PKG_VERSION"), lumikit_core::color::CMF_TABLE_SHA256);
    let matches = match Cli::command().version(version).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok((config, outcome)) => {
            print(json, &config, &outcome);
            match outcome.failure {
                Some(msg) => {
                    eprintln!("error: {msg}");
                    ExitCode::from(1)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
