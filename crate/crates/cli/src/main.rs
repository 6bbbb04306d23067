use std::process::ExitCode;

use clap::Parser;
use scatter_cli::{dispatch, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = dispatch(cli);
    ExitCode::from(code)
}
