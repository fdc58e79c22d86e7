//! Command-line runner for the decoherence-free gate simulator.
//!
//! Verbs: `run`, `enumerate`, `verify`, `noise-bench`. Reports are JSON
//! (or CSV for tabular verbs) with 17-significant-digit floats. Exit codes:
//! `0` everything passed, `1` a check or simulation failed, `2` the
//! configuration was rejected.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;

use clap::Parser;

use crate::commands::{
    bench_report, bench_rows, enumerate_report, enumerate_rows, run_report, thread_pool,
    verify_report, BENCH_CSV_HEADER, ENUMERATE_CSV_HEADER,
};
use crate::config::{Cli, Command, OutputFormat, Settings};
pub use crate::error::{CliError, Result};
use crate::report::{to_csv, to_json};

/// A rendered report and whether every check in it passed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub text: String,
    pub passed: bool,
}

/// Runs `settings.command` and renders its report.
pub fn render(settings: &Settings) -> Result<Rendered> {
    let csv = settings.format == OutputFormat::Csv;
    let pool = thread_pool()?;
    pool.install(|| match settings.command {
        Command::Run => {
            let r = run_report(settings)?;
            Ok(Rendered {
                text: to_json(&r)?,
                passed: r.passed,
            })
        }
        Command::Enumerate => {
            let r = enumerate_report(settings)?;
            let text = if csv {
                to_csv(&ENUMERATE_CSV_HEADER, &enumerate_rows(&r))?
            } else {
                to_json(&r)?
            };
            Ok(Rendered {
                text,
                passed: r.passed,
            })
        }
        Command::Verify => {
            let r = verify_report(settings)?;
            Ok(Rendered {
                text: to_json(&r)?,
                passed: r.passed,
            })
        }
        Command::NoiseBench => {
            let r = bench_report(settings)?;
            let text = if csv {
                to_csv(&BENCH_CSV_HEADER, &bench_rows(&r))?
            } else {
                to_json(&r)?
            };
            Ok(Rendered { text, passed: true })
        }
    })
}

/// Parses `args` (program name first), runs, writes the report and
/// returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (command, flags) = cli.verb.split();
    let outcome = Settings::resolve(command, &flags).and_then(|settings| {
        let rendered = render(&settings)?;
        report::emit(&rendered.text, settings.out.as_deref())?;
        Ok(rendered.passed)
    });
    match outcome {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("dfs-sim: checks failed; see the report");
            1
        }
        Err(e) => {
            eprintln!("dfs-sim: {e}");
            e.exit_code()
        }
    }
}
