//! `defectkit`: the pipeline as subcommands.
//!
//! Exit status is 0 on success, 1 for invalid arguments, configuration or
//! data, and 2 when the filesystem or a storage library fails.

mod args;
mod commands;
mod manifest;

use std::error::Error as _;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use defectkit_core::{load_config, Error, PipelineConfig, Result};
use log::LevelFilter;

use args::{Cli, Command};
use commands::{Context, Outcome};

const LOG_ENV: &str = "DEFECTKIT_LOG";

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        2 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env(env_logger::Env::new().filter(LOG_ENV))
        .format_timestamp(None)
        .init();
}

fn resolve_config(command: &Command) -> Result<PipelineConfig> {
    let common = command.common();
    let mut config = match &common.config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Command::Sample(a) = command {
        if let Some(p) = a.p_inject {
            config.stream.p_inject = p;
        }
    }
    config.validate()?;
    Ok(config)
}

fn run(command: &Command, argv: &[String]) -> Result<()> {
    let config = resolve_config(command)?;
    let common = command.common();
    let ctx = Context { config, out: common.out.clone() };
    commands::create_dir(&ctx.out)?;

    let Outcome { outputs, details } = match command {
        Command::Synth(a) => commands::synth::run(a, &ctx)?,
        Command::Extract(a) => commands::extract::run(a, &ctx)?,
        Command::Pack(a) => commands::pack::run(a, &ctx)?,
        Command::Sample(a) => commands::sample::run(a, &ctx)?,
        Command::Evaluate(a) => commands::evaluate::run(a, &ctx)?,
        Command::Report(a) => commands::report::run(a, &ctx)?,
    };
    let hash = ctx.config.hash_hex()?;
    let info = manifest::RunInfo {
        command: command.name(),
        argv,
        seed: ctx.config.seed,
        config_hash: &hash,
        config_path: common.config.as_deref(),
    };
    let path = manifest::write(&ctx.out, &info, &outputs, &details)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn report_error(e: &Error) {
    eprintln!("error: {e}");
    let mut source = e.source();
    while let Some(s) = source {
        eprintln!("  caused by: {s}");
        source = s.source();
    }
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
    init_logging(cli.command.common().verbose);
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(&cli.command, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
