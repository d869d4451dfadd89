//! `adk`: the dataset toolkit pipeline as subcommands.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for data errors
//! (unreadable or invalid inputs). Logging goes to stderr and is controlled
//! by `ADK_LOG` (`error`, `warn`, `info`, `debug`).

mod args;
mod commands;
mod config;
mod dataset;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::Cli;

/// Command-line misuse detected after parsing; reported with exit status 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn clap_exit(e: clap::Error) -> ExitCode {
    let code = if e.use_stderr() { 1 } else { 0 };
    let _ = e.print();
    ExitCode::from(code)
}

fn parse(argv: Vec<OsString>) -> Result<Cli, ExitCode> {
    let cmd = Cli::command();
    let matches = cmd.clone().try_get_matches_from(&argv).map_err(clap_exit)?;
    let Some(path) = matches.get_one::<std::path::PathBuf>("config").cloned() else {
        return Cli::from_arg_matches(&matches).map_err(clap_exit);
    };
    let usage = |msg: String| {
        eprintln!("error: {msg}");
        ExitCode::from(1)
    };
    let text = std::fs::read_to_string(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let entries = config::parse(&text).map_err(usage)?;
    let (sub, sub_matches) = matches.subcommand().expect("subcommand is required");
    let extra = config::to_args(&entries, &cmd, &matches, sub, sub_matches).map_err(usage)?;
    let mut merged = argv;
    merged.extend(extra.into_iter().map(OsString::from));
    let matches = cmd.try_get_matches_from(&merged).map_err(clap_exit)?;
    Cli::from_arg_matches(&matches).map_err(clap_exit)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ADK_LOG", "warn")).format_timestamp(None).init();
    let cli = match parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
