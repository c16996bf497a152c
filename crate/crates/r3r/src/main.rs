use std::process::ExitCode;

use clap::Parser;
use r3r::cli::{execute, Cli};

fn main() -> ExitCode {
    ExitCode::from(execute(Cli::parse()))
}
