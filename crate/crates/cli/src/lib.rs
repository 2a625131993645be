//! Command-line front end: `minimize`, `fractal` and `bench`.
//!
//! [`run`] takes the argument list and output streams and returns the exit
//! code, so the binary is a thin wrapper and tests can drive it in process.

pub mod bench;
pub mod fractal;
pub mod method;
pub mod minimize;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::Path;

use clap::{Parser, Subcommand};

pub use method::Method;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_STEP_FAILED: i32 = 2;
pub const EXIT_MAX_ITERATIONS: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_BAND_MISS: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "cubic-newton", version, about = "Third-order Newton optimizer, fractals and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one optimizer from one starting point.
    Minimize(minimize::MinimizeArgs),
    /// Render a Newton fractal to PPM and CSV.
    Fractal(fractal::FractalArgs),
    /// Compare iteration counts with a suite of expected values.
    Bench(bench::BenchArgs),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn usage_msg(msg: &str) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn unknown_objective(name: &str) -> Self {
        let names = cubic_newton::objectives::NAMES.join(", ");
        CliError::Usage(format!("unknown objective `{name}` (known: {names})"))
    }

    pub fn io(path: &Path, e: io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn stdout(e: io::Error) -> Self {
        CliError::Io(format!("output: {e}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let informational = !e.use_stderr();
            let text = e.render().to_string();
            let _ = if informational { write!(out, "{text}") } else { write!(err, "{text}") };
            return if informational { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let result = match &cli.command {
        Command::Minimize(a) => minimize::run(a, out),
        Command::Fractal(a) => fractal::run(a, out),
        Command::Bench(a) => bench::run(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
