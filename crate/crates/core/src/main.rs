use std::process::ExitCode;

use clap::Parser;
use sitesim::cli::{run_headless, serve, Cli, Mode};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.mode {
        Mode::Run(args) => run_headless(args).map(|_| ()),
        Mode::Serve(args) => {
            let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
            runtime.block_on(serve(args))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sitesim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
