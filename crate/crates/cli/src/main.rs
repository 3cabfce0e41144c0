mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use crate::config::{Cli, RunConfig};
use crate::error::CliError;

fn load(cli: Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match (cli.config, cli.command) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::new("cli", "config", format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        (None, Some(cmd)) => cmd.into_config(),
        (None, None) => return Err(CliError::new("cli", "config", "no command given; see --help")),
    };
    if let Some(dir) = cli.output_dir {
        cfg.output_dir = Some(dir);
    }
    cfg.resolve()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::new("cli", "config", e.kind().to_string() + ": " + e.to_string().trim());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match load(cli).and_then(|cfg| commands::run(&cfg)) {
        Ok(manifest) => {
            // a closed pipe on stdout is not a failure of the run
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&manifest["summary"]).expect("json"));
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
