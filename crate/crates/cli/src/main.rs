use std::process::ExitCode;

use clap::Parser;

mod cli;
mod commands;
mod error;
mod svg;

use cli::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => commands::gen::run(a),
        Command::Fit(a) => commands::fit::run(a),
        Command::Stream(a) => commands::stream::run(a),
        Command::Sweep(a) => commands::sweep::run(a),
        Command::Plot(a) => commands::plot::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Check(a) => commands::check::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
