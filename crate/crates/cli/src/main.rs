use std::process::ExitCode;

use clap::Parser;
use rentlearn::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rentlearn: {e}");
            e.exit_code()
        }
    }
}
