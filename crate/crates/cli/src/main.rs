mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use config::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let op = commands::name(&cli.command);
    let cfg = commands::config(&cli.command);
    let outcome = commands::execute(&cli.command, &cfg).and_then(|o| commands::emit(&cfg, &o.body).map(|_| o.passed));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{op}: check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{op}: {e:#}");
            ExitCode::from(1)
        }
    }
}
