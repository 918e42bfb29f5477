use std::process::ExitCode;

use clap::Parser;
use knva_cli::{exit_code, run, RunConfig};

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    let stdout = std::io::stdout();
    let result = run(&cfg, &mut stdout.lock());
    if let Err(e) = &result {
        eprintln!("error: {e:#}");
    }
    ExitCode::from(exit_code(&result) as u8)
}
