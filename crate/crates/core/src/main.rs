mod cli;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = cli::Cli::parse();
    match cli::run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (object, code) = cli::error_report(&err);
            eprintln!("{object}");
            ExitCode::from(code as u8)
        }
    }
}
