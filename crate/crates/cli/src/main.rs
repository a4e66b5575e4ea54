use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use kduality::{exit_code, run, Command, RunError, EXIT_CONFIG};

const THREADS_ENV: &str = "KDUALITY_THREADS";

/// Verify involution-kernel duality for finite-depth potentials.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of convergence traces.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Worker threads; overrides KDUALITY_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Tolerance for certified limits, oracle agreement and reconstruction.
    #[arg(long)]
    tol: Option<f64>,
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?)),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match real_main(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = e.downcast_ref::<RunError>().map_or(EXIT_CONFIG, RunError::exit_code);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn real_main(args: &Args) -> Result<u8> {
    if let Some(n) = threads(args.threads)? {
        kernel_duality::configure_threads(n);
    }
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let report = run(args.command, &text, args.tol)?;
    let json = report.to_json();
    match &args.out {
        Some(p) => write_atomic(p, &json)?,
        None => std::io::stdout().write_all(json.as_bytes())?,
    }
    if let Some(p) = &args.trace {
        write_atomic(p, &report.to_csv())?;
    }
    for sec in &report.sections {
        if let Some(r) = &sec.refusal {
            eprintln!("{}: {r}", sec.command);
        }
        for rec in sec.records.iter().filter(|r| !r.pass) {
            eprintln!("{}: FAIL {} (residual {} > bound {})", sec.command, rec.check, rec.residual, rec.bound);
        }
    }
    Ok(exit_code(&report))
}
