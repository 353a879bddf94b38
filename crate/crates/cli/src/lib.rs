//! Command-line harness around `aggsim-core`.
//!
//! `aggsim <experiment> [--key value | key=value]...` runs one experiment,
//! writes its CSV (with the resolved configuration echoed as `# key=value`
//! lines), any side files, and a JSON summary of the checks. Exit status:
//! 0 all checks pass, 1 a check failed, 2 configuration error, 3 I/O error.

pub mod config;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

pub use aggsim_core as core;
use serde_json::json;

use crate::config::{ConfigError, Experiment};
use crate::experiments::{run_experiment, Report};
use crate::output::{render_csv, sibling, write_atomic};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "AGGSIM_THREADS";

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Io(PathBuf, std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Io(..) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(msg) => write!(f, "configuration error: {msg}"),
            RunError::Io(path, e) => write!(f, "I/O error on {}: {e}", path.display()),
        }
    }
}

fn thread_cap() -> Result<Option<usize>, RunError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

/// Runs the experiment on a pool capped by `AGGSIM_THREADS`.
pub fn execute(experiment: &Experiment) -> Result<Report, RunError> {
    let run = || run_experiment(experiment).map_err(|e| RunError::Config(e.to_string()));
    match thread_cap()? {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Config(e.to_string()))?
            .install(run),
    }
}

/// Writes the CSV, side files and summary; returns the summary path.
pub fn write_outputs(experiment: &Experiment, report: &Report) -> Result<PathBuf, RunError> {
    let path = experiment.out_path();
    let header = experiment.echo();
    let io = |p: &PathBuf| {
        let p = p.clone();
        move |e| RunError::Io(p, e)
    };
    write_atomic(&path, &render_csv(&header, &report.table)).map_err(io(&path))?;
    for (suffix, table) in &report.extra_tables {
        let p = sibling(&path, suffix);
        write_atomic(&p, &render_csv(&header, table)).map_err(io(&p))?;
    }
    for (suffix, value) in &report.json {
        let p = sibling(&path, suffix);
        let text = serde_json::to_string_pretty(value).expect("json values serialize") + "\n";
        write_atomic(&p, text.as_bytes()).map_err(io(&p))?;
    }
    let summary = json!({
        "experiment": experiment.name(),
        "config": header.iter().cloned().collect::<std::collections::BTreeMap<_, _>>(),
        "output": path.display().to_string(),
        "passed": report.passed(),
        "checks": report.checks.iter().map(|c| json!({
            "name": c.name, "passed": c.passed, "detail": c.detail,
        })).collect::<Vec<_>>(),
    });
    let p = sibling(&path, "summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("json values serialize") + "\n";
    write_atomic(&p, text.as_bytes()).map_err(io(&p))?;
    Ok(p)
}

/// Full command-line entry point; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let cli = match config::parse(args) {
        Ok(cli) => cli,
        Err(ConfigError::Parse(e)) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
        Err(ConfigError::Io(path, e)) => {
            eprintln!("{}", RunError::Io(path, e));
            return EXIT_IO;
        }
    };
    let report = match execute(&cli.experiment) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let summary = match write_outputs(&cli.experiment, &report) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!(
        "wrote {} and {}",
        cli.experiment.out_path().display(),
        summary.display()
    );
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    }
}
