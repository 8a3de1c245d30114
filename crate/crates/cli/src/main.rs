use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use epi_lab_cli::report::{to_bytes, write_atomic};
use epi_lab_cli::{execute, Cli, RunError, UsageError};

fn configure_threads() -> Result<(), UsageError> {
    let Ok(raw) = std::env::var("EPI_LAB_THREADS") else {
        return Ok(());
    };
    let n = raw
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError::Invalid {
            param: "EPI_LAB_THREADS".into(),
            reason: format!("{raw:?} is not a positive integer"),
        })?;
    // fails only if a pool already exists, which cannot happen this early
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn run() -> Result<bool, RunError> {
    configure_threads()?;
    let spec = match Cli::try_parse() {
        Ok(cli) => cli.into_run_spec()?,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let report = execute(&spec)?;
    let bytes = to_bytes(&report, spec.format())?;
    match &spec.output_path {
        Some(path) => write_atomic(path, &bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    if let Some(w) = &report.scope_warning {
        eprintln!("epi-lab: out of scope: {w}");
    }
    Ok(!report.out_of_scope())
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("epi-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
