use std::process::ExitCode;

use clap::Parser;

use nitsche_bem_cli::{run, Cli};

const EXIT_NOT_CONVERGED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&config) {
        Ok(summary) => {
            eprintln!("manifest written to {}", summary.manifest.display());
            if summary.all_converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("not all solves converged");
                ExitCode::from(EXIT_NOT_CONVERGED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
