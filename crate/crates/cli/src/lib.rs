//! `adrx` command-line front end.

// `!(x >= 0.0)` rejects NaN as well as negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod error;
pub mod specfile;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use args::{Cli, Command};
pub use error::{CliError, Result};
pub use table::{Cell, Format, Table};

/// Draws a seed when none was given and reports it on stderr.
fn resolve_seed(seed: &mut Option<u64>) {
    if seed.is_none() {
        let s: u64 = rand::random();
        eprintln!("seed: {s}");
        *seed = Some(s);
    }
}

/// Fills in derived settings (power grid, seed) so the command is fully
/// determined, then runs it.
pub fn execute(command: &mut Command) -> Result<Table> {
    match command {
        Command::Sweep(a) => {
            a.grid.resolve()?;
            resolve_seed(&mut a.run.seed);
            commands::sweep(a)
        }
        Command::Trace(a) => commands::trace(a),
        Command::Bench(a) => {
            a.grid.resolve()?;
            commands::bench(a)
        }
        Command::Optimize(a) => {
            a.grid.resolve()?;
            if !commands::optimize_is_analytic(a) {
                resolve_seed(&mut a.run.seed);
            }
            commands::optimize(a)
        }
        Command::Simulate(a) => {
            resolve_seed(&mut a.run.seed);
            commands::simulate(a)
        }
    }
}

fn dump_text(command: &Command) -> Result<String> {
    let name = command.name();
    match command {
        Command::Sweep(a) => specfile::dump(name, a),
        Command::Trace(a) => specfile::dump(name, a),
        Command::Bench(a) => specfile::dump(name, a),
        Command::Optimize(a) => specfile::dump(name, a),
        Command::Simulate(a) => specfile::dump(name, a),
    }
}

fn spec_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(2);
    while let Some(a) = it.next() {
        let s = a.to_str()?;
        if s == "--spec" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--spec=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn run_parsed(mut cli: Cli) -> Result<()> {
    let table = execute(&mut cli.command)?;
    let io = cli.command.io().clone();
    if let Some(path) = &io.dump_spec {
        let text = dump_text(&cli.command)?;
        std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    }
    table.write_to(io.format, io.output.as_deref())
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code: 0 on success, 2 for bad arguments, 3 when a
/// requested precision cannot be met, 4 for I/O failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    if let Some(path) = spec_path(&argv) {
        match specfile::read(&path).and_then(|entries| specfile::merge(&argv, &entries)) {
            Ok(merged) => argv = merged,
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        }
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run_parsed(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
