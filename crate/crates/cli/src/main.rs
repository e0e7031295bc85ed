mod args;
mod commands;
mod error;
mod io;
mod manifest;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::Result;
use crate::manifest::RunLog;

fn init_logging() {
    // ADLENS_LOG wins; TOOL_LOG is accepted as a generic fallback.
    let var = if std::env::var_os("ADLENS_LOG").is_some() || std::env::var_os("TOOL_LOG").is_none() {
        "ADLENS_LOG"
    } else {
        "TOOL_LOG"
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(var, "warn"))
        .format_timestamp(None)
        .init();
}

fn name(command: &Command) -> &'static str {
    match command {
        Command::Synth(_) => "synth",
        Command::Serve(_) => "serve",
        Command::Crawl(_) => "crawl",
        Command::Label(_) => "label",
        Command::Tier(_) => "tier",
        Command::Analyze(_) => "analyze",
        Command::Featurize(_) => "featurize",
        Command::Split(_) => "split",
        Command::Train(_) => "train",
        Command::Eval(_) => "eval",
        Command::DetectHidden(_) => "detect-hidden",
        Command::Report(_) => "report",
    }
}

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let mut log = RunLog::new(name(&cli.command), cli.seed);
    let out = match &cli.command {
        Command::Serve(a) => return commands::serve(a),
        Command::Synth(a) => commands::synth(a, &mut log)?,
        Command::Crawl(a) => commands::crawl(a, &mut log)?,
        Command::Label(a) => commands::label(a, &mut log)?,
        Command::Tier(a) => commands::tier(a, &mut log)?,
        Command::Analyze(a) => commands::analyze_cmd(a, &mut log)?,
        Command::Featurize(a) => commands::featurize(a, &mut log)?,
        Command::Split(a) => commands::split(a, &mut log)?,
        Command::Train(a) => commands::train(a, &mut log)?,
        Command::Eval(a) => commands::eval(a, &mut log)?,
        Command::DetectHidden(a) => commands::detect(a, &mut log)?,
        Command::Report(a) => commands::report(a, &mut log)?,
    };
    log.finish(&out, started.elapsed().as_secs_f64())
}

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
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
