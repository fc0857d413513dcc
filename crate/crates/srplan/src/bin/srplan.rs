use std::process::ExitCode;

use clap::Parser;
use srplan::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("srplan: {}", e.message);
            ExitCode::from(e.kind as u8)
        }
    }
}
