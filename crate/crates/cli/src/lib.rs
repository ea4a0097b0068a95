//! Command-line front end of `darboux-bands-core`.
//!
//! `run` parses flags into a [`RunConfig`], executes the subcommand on a
//! worker pool capped by `DARBOUX_BANDS_THREADS`, and writes CSV, JSON and
//! SVG files into the output directory. Exit codes: 0 success, 2 bad
//! configuration, 3 numerical failure.

use std::ffi::OsString;

use clap::Parser;
use darboux_bands_core::Error;

pub mod commands;
pub mod config;
pub mod output;

pub use config::{Cli, Command, Format, PotentialDesc, RunConfig};
pub use output::ResultBundle;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "DARBOUX_BANDS_THREADS";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numeric(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(e) => write!(f, "{}: {e}", e.name()),
        }
    }
}

impl std::error::Error for CliError {}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(s) = std::env::var(THREADS_ENV) {
        match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => b = b.num_threads(n),
            _ => return Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{s}'"))),
        }
    }
    b.build().map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}

/// Execute a validated configuration without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    thread_pool()?.install(|| commands::execute(cfg))
}

/// Full pipeline for `argv` (including the program name); returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match RunConfig::from_cli(cli) {
        Ok(cfg) => run_config(&cfg),
        Err(e) => {
            eprintln!("{e}");
            EXIT_CONFIG
        }
    }
}

pub fn run_config(cfg: &RunConfig) -> i32 {
    match execute(cfg) {
        Ok(bundle) => match output::write_bundle(cfg, &bundle) {
            Ok(paths) => {
                for line in &bundle.summary {
                    println!("{line}");
                }
                for p in paths {
                    println!("wrote {}", p.display());
                }
                EXIT_OK
            }
            Err(e) => {
                eprintln!("cannot write outputs to {}: {e}", cfg.out);
                EXIT_CONFIG
            }
        },
        Err(CliError::Config(m)) => {
            eprintln!("configuration error: {m}");
            EXIT_CONFIG
        }
        Err(CliError::Numeric(e)) => {
            let doc = output::error_json(cfg, e.name(), &e.to_string());
            if cfg.formats.contains(&Format::Json) {
                let dir = std::path::Path::new(&cfg.out);
                let path = dir.join(format!("{}.json", cfg.command.name()));
                if let Err(w) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, &doc)) {
                    eprintln!("cannot write error report: {w}");
                }
            }
            eprint!("{doc}");
            EXIT_NUMERIC
        }
    }
}
