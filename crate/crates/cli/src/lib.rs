//! Batch front-end for `kernel-duality`: JSON experiment configs in,
//! deterministic JSON reports and CSV traces out.

pub mod commands;
pub mod config;
pub mod report;

use commands::{Context, ANCHOR_ABORT};
use config::ExperimentConfig;
use report::{sha256_hex, Recorder, Report, Section};

/// Why a run stopped early.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("outside theorem regime: {0}")]
    Regime(String),
    #[error("{0}")]
    Failed(String),
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_REGIME: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Dualize,
    Spectrum,
    Pair,
    Koopman,
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Dualize => "dualize",
            Command::Spectrum => "spectrum",
            Command::Pair => "pair",
            Command::Koopman => "koopman",
            Command::Verify => "verify",
        }
    }
}

/// Runs one subcommand section; regime refusals and numerical failures are
/// recorded in the section, config errors abort the run.
fn section(ctx: &mut Context, command: Command) -> Result<Section, RunError> {
    let out = match command {
        Command::Dualize => commands::dualize(ctx),
        Command::Spectrum => commands::spectrum(ctx),
        Command::Pair => commands::pair(ctx),
        Command::Koopman => commands::koopman(ctx),
        Command::Verify => unreachable!("verify expands to the other commands"),
    };
    match out {
        Ok(s) => Ok(s),
        Err(RunError::Config(m)) => Err(RunError::Config(m)),
        Err(RunError::Regime(m)) => {
            let mut s = Section::new(command.name());
            s.refusal = Some(format!("outside theorem regime: {m}"));
            Ok(s)
        }
        Err(RunError::Failed(m)) => {
            let mut s = Section::new(command.name());
            let rec = Recorder { config_digest: &ctx.digest, command: command.name() };
            s.records.push(rec.record(format!("aborted: {m}"), ANCHOR_ABORT, "", f64::INFINITY, 0.0));
            Ok(s)
        }
    }
}

/// Parses, validates and runs `command` on the config text.
pub fn run(command: Command, config_text: &str, tol: Option<f64>) -> Result<Report, RunError> {
    let digest = sha256_hex(config_text.as_bytes());
    let mut exp = ExperimentConfig::parse(config_text)?.validate()?;
    if let Some(t) = tol {
        if t.is_nan() || t <= 0.0 {
            return Err(RunError::Config(format!("--tol must be positive, got {t}")));
        }
        exp.limit_tol = t;
    }
    let mut ctx = Context::new(exp, digest.clone())?;
    let list = match command {
        Command::Verify => vec![Command::Dualize, Command::Spectrum, Command::Pair, Command::Koopman],
        c => vec![c],
    };
    let mut sections = Vec::new();
    for c in list {
        sections.push(section(&mut ctx, c)?);
    }
    Ok(Report::new(digest, sections))
}

/// Exit status of a finished report: failures first, then refusals.
pub fn exit_code(report: &Report) -> u8 {
    if report.records().any(|r| !r.pass) {
        EXIT_FAIL
    } else if report.sections.iter().any(|s| s.refusal.is_some()) {
        EXIT_REGIME
    } else {
        EXIT_PASS
    }
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Regime(_) => EXIT_REGIME,
            RunError::Failed(_) => EXIT_FAIL,
        }
    }
}
