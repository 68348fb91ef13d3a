mod commands;
mod config;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use lpm_core::report::to_json_string;
use serde_json::json;

use config::{Args, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] lpm_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Core(e) if e.is_validation() => 1,
            _ => 2,
        }
    }
}

const SCHEMA_VERSION: u32 = 1;

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(args: &Args) -> Result<bool, CliError> {
    let cfg = RunConfig::from_args(args)?;
    cfg.validate()?;
    let Some(cmd) = cfg.subcommand else {
        eprintln!("{}", Args::command().render_usage());
        return Err(CliError::Validation("no subcommand given".into()));
    };
    if let Some(workers) = cfg.workers {
        // the global pool can only be set once; a second call in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    let out = commands::run(cmd, &cfg)?;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "subcommand": cmd.name(),
        "config": cfg,
        "result": out.result,
    });
    let text = to_json_string(&doc);
    print_stdout(&text)?;
    if let Some(dir) = &cfg.out {
        write(&dir.join(format!("{}.json", cmd.name())), &(text + "\n"), dir)?;
        for table in &out.tables {
            let path = dir.join(format!("{}_{}.csv", cmd.name(), table.name));
            write(&path, &table.to_csv()?, dir)?;
        }
    }
    Ok(out.passed)
}

/// A closed pipe (e.g. `| head`) is not an error.
fn print_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io { path: "stdout".into(), source: e }),
        _ => Ok(()),
    }
}

fn write(path: &Path, contents: &str, dir: &Path) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.display().to_string(), source };
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(path, contents).map_err(io)
}
