//! `privmax` command-line front end.
//!
//! Exit codes: 0 success, 1 error, 2 usage error, 3 the gap mechanism
//! returned Fail, 4 the large margin mechanism fell back uncertified,
//! 5 an audit found violations.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::exit;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Select => commands::select(&cli.run),
        Command::BenchRange(a) => commands::bench_range(&cli.run, a),
        Command::Audit(a) => commands::audit(&cli.run, a),
        Command::Fim(a) => commands::fim(&cli.run, a),
        Command::Pac(a) => commands::pac(&cli.run, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::ERROR)
        }
    }
}
