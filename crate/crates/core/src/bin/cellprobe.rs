use std::process::ExitCode;

use clap::Parser;

use cellprobe::cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli, &mut std::io::stdout().lock());
    if let Err(err) = &result {
        eprintln!("error: {err}");
    }
    ExitCode::from(exit_code(&result) as u8)
}
