use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

mod args;
mod commands;
mod config;
mod error;
mod output;

use args::Cli;
use error::CliError;

/// Optional worker-count override for the parallel grid evaluations.
const THREADS_ENV: &str = "PTMATHIEU_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    configure_threads()?;
    let (table, summary) = commands::run(&cli.command)?;
    let config = output::config_pairs(&serde_json::to_value(&cli.command).expect("args serialize"));
    log::info!("resolved config: {config:?}");
    let out = cli.command.output();
    let text = table.render(out.format, &config);
    match &out.output {
        Some(path) => {
            output::write_atomic(path, &text)?;
            Ok(format!("{}: {summary}; {} rows written to {}", cli.command.name(), table.rows.len(), path.display()))
        }
        None => {
            print!("{text}");
            Ok(format!("{}: {summary}; {} rows", cli.command.name(), table.rows.len()))
        }
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.record());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let argv = match config::expand_argv(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return fail(&CliError::Config(e.kind().to_string()));
        }
    };
    env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .init();
    match execute(&cli) {
        Ok(summary) => {
            eprintln!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
