use std::process::ExitCode;

use clap::Parser;
use prosumer_sim::cli::{self, Cli};

fn main() -> ExitCode {
    cli::main_with(Cli::parse())
}
