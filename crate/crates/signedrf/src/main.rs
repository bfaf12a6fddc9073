use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use signedrf::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
            // a closed pipe (e.g. `| head`) is not an error worth a panic
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if outcome.failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            let mut msg = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            if e.kind() == "unsupported_spectrum" {
                msg["hint"] = "rerun with --numeric to tabulate the forward transform".into();
            }
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
