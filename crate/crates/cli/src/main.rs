use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use jumpmeans_cli::args::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = jumpmeans_cli::configure_threads().and_then(|()| jumpmeans_cli::run(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jumpmeans: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
