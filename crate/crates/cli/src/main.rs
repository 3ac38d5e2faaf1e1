mod args;
mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::Cli;
use commands::CliError;
use manifest::{hash_files, sha256_bytes, FileHash, Manifest};

fn parse_args() -> Result<Cli, ExitCode> {
    let mut argv: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = config::config_path(&argv) {
        let table = config::load(path.as_ref()).map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(1)
        })?;
        let command = Cli::command();
        let accepts = |sub: &str, flag: &str| {
            command
                .find_subcommand(sub)
                .is_some_and(|s| s.get_arguments().any(|a| a.get_long() == Some(flag)))
        };
        argv = config::merge(argv, &table, accepts).map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(1)
        })?;
    }
    Cli::try_parse_from(argv).map_err(|e| {
        let _ = e.print();
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
            _ => ExitCode::from(1),
        }
    })
}

fn execute(cli: &Cli) -> Result<u8, CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Invalid(format!("cannot size thread pool: {e}")))?;
    }
    let outcome = commands::run(&cli.command, cli.jobs)?;

    let mut outputs = hash_files(&outcome.outputs)?;
    if let Some(text) = &outcome.stdout {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(text.as_bytes())?;
        stdout.flush()?;
        outputs.push(FileHash {
            path: "-".into(),
            sha256: sha256_bytes(text.as_bytes()),
        });
    }
    if let Some(path) = &outcome.manifest {
        let manifest = Manifest {
            command: cli.command.name().to_string(),
            config: serde_json::to_value(cli).map_err(|e| CliError::Invalid(e.to_string()))?,
            inputs: hash_files(&outcome.inputs)?,
            outputs,
        };
        manifest.write(path)?;
    }
    if outcome.backend_failures > 0 {
        eprintln!(
            "error: {} item(s) failed at the backend; outputs were written without them",
            outcome.backend_failures
        );
        return Ok(2);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match parse_args() {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
