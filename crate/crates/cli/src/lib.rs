//! Command-line front end: `run(argv)` parses, evaluates and writes one table.

mod args;
mod commands;
mod output;

use std::ffi::OsString;

use clap::Parser;
use lastzero_core::{Error, QuadratureConfig};
use serde_json::{json, Value};

pub use args::{Cli, Command, Format};
pub use output::{format_real, Cell, Table, LOG_FLOOR};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Caps the worker count; 0 or unset means one per core.
pub const THREADS_ENV: &str = "LASTZERO_THREADS";

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let threads = match std::env::var(THREADS_ENV) {
        Err(_) => 0,
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) => n,
            Err(_) => {
                eprintln!("error: {THREADS_ENV} must be a non-negative integer, got {v:?}");
                return EXIT_USAGE;
            }
        },
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_USAGE;
        }
    };
    pool.install(|| execute(&cli, &argv, threads))
}

fn execute(cli: &Cli, argv: &[OsString], threads: usize) -> i32 {
    let q = match QuadratureConfig::new(
        QuadratureConfig::default().abs_tol,
        cli.output.tol,
        QuadratureConfig::default().max_depth,
    ) {
        Ok(q) if cli.output.tol > 0.0 && cli.output.tol < 1.0 => q,
        _ => {
            eprintln!(
                "error: invalid --tol: must lie in (0, 1), got {}",
                cli.output.tol
            );
            return EXIT_USAGE;
        }
    };
    let run = match commands::execute(&cli.command, &q) {
        Ok(run) => run,
        Err(e) => return report(&e),
    };
    let mut manifest = json!({
        "tool": "lastzero",
        "version": env!("CARGO_PKG_VERSION"),
        "params": &cli.command,
        "output": &cli.output,
        "threads": threads,
        "timestamp": chrono::Utc::now().to_rfc3339(),
        "argv": argv.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>(),
    });
    if let Value::Object(m) = &mut manifest {
        m.extend(run.extras);
    }
    match output::emit(
        &run.table,
        &manifest,
        cli.output.format,
        cli.output.out.as_deref(),
    ) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let target = cli
                .output
                .out
                .as_ref()
                .map_or("stdout".to_string(), |p| p.display().to_string());
            eprintln!("error: --out: cannot write {target}: {e}");
            EXIT_USAGE
        }
    }
}

fn flag(name: &str) -> String {
    match name {
        "rel_tol" | "abs_tol" => "--tol".into(),
        other => format!("--{}", other.replace('_', "-")),
    }
}

fn report(e: &Error) -> i32 {
    match e {
        Error::Domain { name, message } => {
            eprintln!("error: invalid {}: {name} {message}", flag(name));
            EXIT_USAGE
        }
        e if e.is_non_convergence() => {
            eprintln!("error: numerical non-convergence: {e}");
            EXIT_NUMERIC
        }
        e => {
            eprintln!("error: {e}");
            EXIT_NUMERIC
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_exit_codes() {
        let domain = Error::Domain {
            name: "n_paths",
            message: "must be >= 100".into(),
        };
        assert_eq!(report(&domain), EXIT_USAGE);
        assert_eq!(flag("n_paths"), "--n-paths");
        assert_eq!(flag("rel_tol"), "--tol");
        let root = Error::RootNonConvergence {
            iterations: 200,
            target: 0.5,
        };
        assert_eq!(report(&root), EXIT_NUMERIC);
        let quad = Error::QuadratureNonConvergence {
            lo: 0.0,
            hi: 1.0,
            value: 0.5,
            err_estimate: 1e-3,
        };
        assert_eq!(report(&quad), EXIT_NUMERIC);
    }

    #[test]
    fn help_and_version_succeed() {
        assert_eq!(run(["lastzero", "--version"]), EXIT_OK);
        assert_eq!(run(["lastzero", "md", "--help"]), EXIT_OK);
        assert_eq!(run(["lastzero", "frobnicate"]), EXIT_USAGE);
    }
}
