use std::process::ExitCode;

use clap::Parser;
use gann_bench::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.chain().any(|c| {
                matches!(c.downcast_ref::<gann_core::Error>(), Some(gann_core::Error::Param(_)))
            });
            ExitCode::from(if usage { 1 } else { 2 })
        }
    }
}
