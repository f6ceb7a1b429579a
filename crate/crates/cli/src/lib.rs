//! The `recprover` command: read an informal statement or a Lean file, run
//! the orchestrator against the configured services and write the results
//! to an output directory.
//!
//! Exit codes: 0 proof found, 1 proof search failed, 2 bad input or
//! configuration.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{ArgGroup, CommandFactory, Parser};
use recprover::config::{Config, ConfigError, DEFAULT_INI};
use recprover::lean_source::{has_declaration, split_source, LeanSource};
use recprover::orchestrator::{Orchestrator, RunOptions, RunOutcome, Services};
use recprover::proof_state::{ProofTree, TreeError};
use recprover::services::{HttpChatClient, HttpLeanClient, HttpSearchClient};
use thiserror::Error;

pub const EXIT_PROVED: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

pub const PROOF_FILE: &str = "proof.lean";
pub const DIAGNOSTIC_FILE: &str = "diagnostic.txt";
pub const FAILURE_FILE: &str = "failure.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const RUN_LOG_FILE: &str = "run.jsonl";

#[derive(Debug, Clone, Parser)]
#[command(name = "recprover", version, about = "Prove a theorem in Lean 4 by recursive decomposition")]
#[command(group(ArgGroup::new("input").required(true).args(["informal", "file", "resume"])))]
pub struct Cli {
    /// Natural-language statement to formalize and prove.
    #[arg(long, value_name = "TEXT")]
    pub informal: Option<String>,
    /// Lean file holding the theorem (with imports), proof replaced by `sorry`.
    #[arg(long, value_name = "PATH")]
    pub file: Option<PathBuf>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long, value_name = "CHECKPOINT")]
    pub resume: Option<PathBuf>,
    /// INI file layered over the packaged defaults.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for proof.lean, checkpoint.json, run.jsonl and diagnostics.
    #[arg(long, value_name = "DIR", default_value = "recprover-out")]
    pub out: PathBuf,
    /// Concurrent service calls.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u16).range(1..))]
    pub workers: u16,
    /// Override the maximum decomposition depth.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_depth: Option<u32>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Error)]
pub enum InputError {
    #[error("the Lean input has no header; it must start with imports such as `import Mathlib`")]
    MissingHeader,
    #[error("the Lean input has no theorem or lemma declaration")]
    MissingDeclaration,
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] TreeError),
    #[error("cannot write to {path}: {message}")]
    Write { path: PathBuf, message: String },
}

/// Accept a formal input only if it has an import header and a
/// declaration. The returned source carries the normalized header.
pub fn validate_formal_input(code: &str) -> Result<LeanSource, InputError> {
    let src = split_source(code);
    let has_import = src.preamble.lines().any(|l| l.trim_start().starts_with("import "));
    if !has_declaration(&src.body) {
        if has_import || src.body.trim().is_empty() {
            return Err(InputError::MissingDeclaration);
        }
        return Err(InputError::MissingHeader);
    }
    if !has_import {
        return Err(InputError::MissingHeader);
    }
    Ok(src.normalized())
}

fn diagnostic_text(err: &InputError) -> String {
    let mut text = format!("error: {err}\n");
    match err {
        InputError::MissingHeader => text.push_str(
            "\nFormal inputs must be complete Lean units. Start the file with a header, for example:\n\n\
             import Mathlib\nimport Aesop\n\nset_option maxHeartbeats 400000\n\n\
             open BigOperators Real Nat Topology Rat\n\n\
             followed by the theorem whose proof is `sorry`.\n",
        ),
        InputError::MissingDeclaration => text.push_str(
            "\nAfter the header, the file must contain the theorem to prove, for example:\n\n\
             theorem my_theorem (n : ℕ) : n + 0 = n := by\n  sorry\n",
        ),
        _ => {}
    }
    text
}

fn write_file(path: &Path, text: &str) -> Result<(), InputError> {
    std::fs::write(path, text).map_err(|e| InputError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read_file(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Build HTTP clients for every service named in `cfg`.
pub fn http_services(cfg: &Config) -> Result<Services, ConfigError> {
    Ok(Services {
        chat: Arc::new(HttpChatClient::new(cfg.chat_backends()?)),
        lean: Arc::new(HttpLeanClient::new(cfg.lean_server()?)),
        search: Arc::new(HttpSearchClient::new(cfg.search()?)),
    })
}

enum Start {
    Informal(String),
    Formal(LeanSource),
    Resume(ProofTree),
}

fn report_input_error(cli: &Cli, err: &InputError, out: &mut impl Write) {
    let _ = writeln!(out, "error: {err}");
    if matches!(err, InputError::MissingHeader | InputError::MissingDeclaration) {
        let path = cli.out.join(DIAGNOSTIC_FILE);
        if std::fs::create_dir_all(&cli.out).is_ok() && std::fs::write(&path, diagnostic_text(err)).is_ok() {
            let _ = writeln!(out, "details written to {}", path.display());
        }
    }
    if matches!(err, InputError::Config(ConfigError::Io { .. }) | InputError::Read { .. }) {
        let _ = writeln!(out, "\n{}", Cli::command().render_usage());
    }
}

/// Run one invocation with `env` as the process environment. Human-readable
/// progress goes to `stdout`, errors to `stderr`.
pub async fn run<'a>(
    cli: &Cli,
    env: impl IntoIterator<Item = (&'a str, &'a str)>,
    stdout: &mut impl Write,
    stderr: &mut impl Write,
) -> i32 {
    match prepare(cli, env) {
        Ok((services, cfg_limits, start)) => execute(cli, services, cfg_limits, start, stdout, stderr).await,
        Err(e) => {
            report_input_error(cli, &e, stderr);
            EXIT_INPUT
        }
    }
}

/// Like [`run`] but with caller-supplied services.
pub async fn run_with_services<'a>(
    cli: &Cli,
    env: impl IntoIterator<Item = (&'a str, &'a str)>,
    services: Services,
    stdout: &mut impl Write,
    stderr: &mut impl Write,
) -> i32 {
    match prepare(cli, env) {
        Ok((_, limits, start)) => execute(cli, services, limits, start, stdout, stderr).await,
        Err(e) => {
            report_input_error(cli, &e, stderr);
            EXIT_INPUT
        }
    }
}

fn prepare<'a>(
    cli: &Cli,
    env: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<(Services, (recprover::config::Limits, u64), Start), InputError> {
    let cfg = Config::load(DEFAULT_INI, cli.config.as_deref(), env)?;
    let mut limits = cfg.typed_limits()?;
    if let Some(d) = cli.max_depth {
        limits.max_depth = d;
    }
    let timeout = cfg.lean_timeout_secs()?;
    let services = http_services(&cfg)?;
    let start = if let Some(text) = &cli.informal {
        Start::Informal(text.clone())
    } else if let Some(path) = &cli.file {
        Start::Formal(validate_formal_input(&read_file(path)?)?)
    } else {
        let path = cli.resume.as_deref().expect("clap requires one input");
        let mut tree = ProofTree::load_checkpoint(path)?;
        if cli.max_depth.is_some() {
            tree.limits.max_depth = limits.max_depth;
        }
        Start::Resume(tree)
    };
    std::fs::create_dir_all(&cli.out).map_err(|e| InputError::Write {
        path: cli.out.clone(),
        message: e.to_string(),
    })?;
    Ok((services, (limits, timeout), start))
}

async fn execute(
    cli: &Cli,
    services: Services,
    (limits, lean_timeout_secs): (recprover::config::Limits, u64),
    start: Start,
    stdout: &mut impl Write,
    stderr: &mut impl Write,
) -> i32 {
    let checkpoint = cli.out.join(CHECKPOINT_FILE);
    let options = RunOptions {
        workers: cli.workers as usize,
        lean_timeout_secs,
        checkpoint: Some(checkpoint.clone()),
        run_log: Some(cli.out.join(RUN_LOG_FILE)),
        ..RunOptions::default()
    };
    let orch = Orchestrator::new(services, options);
    let report = match start {
        Start::Informal(text) => {
            let _ = writeln!(stdout, "proving informal statement");
            orch.prove_informal(&text, limits).await
        }
        Start::Formal(src) => {
            let _ = writeln!(stdout, "proving {}", cli.file.as_deref().unwrap_or(Path::new("-")).display());
            orch.prove_formal(src, limits).await
        }
        Start::Resume(tree) => {
            let _ = writeln!(stdout, "resuming from {}", cli.resume.as_deref().unwrap_or(Path::new("-")).display());
            orch.run(tree).await
        }
    };
    // The orchestrator saves as it goes; save again so a failed write
    // along the way does not leave a stale file.
    if let Err(e) = report.tree.save_checkpoint(&checkpoint) {
        let _ = writeln!(stderr, "warning: checkpoint not written: {e}");
    }
    match report.outcome {
        RunOutcome::Proved(proof) => {
            let path = cli.out.join(PROOF_FILE);
            if let Err(e) = write_file(&path, &proof) {
                let _ = writeln!(stderr, "error: {e}");
                let _ = write!(stdout, "{proof}");
                return EXIT_FAILED;
            }
            let _ = writeln!(stdout, "proof written to {}\n", path.display());
            let _ = write!(stdout, "{proof}");
            EXIT_PROVED
        }
        RunOutcome::Failed(f) => {
            let text = f.to_string();
            let path = cli.out.join(FAILURE_FILE);
            let _ = write_file(&path, &text);
            let _ = write!(stderr, "{text}");
            let _ = writeln!(stderr, "checkpoint: {}", checkpoint.display());
            EXIT_FAILED
        }
    }
}

/// Log filter for a `-v` count.
pub fn log_level(verbose: u8) -> &'static str {
    match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    }
}
