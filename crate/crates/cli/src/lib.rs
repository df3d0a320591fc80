//! Batch front end: CSV in, JSON/CSV/text reports out.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Format};
use crate::error::{CliError, Result};

pub use commands::run_command;
pub use ingest::{ingest_csv, read_csv, Table};
pub use report::Report;

fn parse(argv: Vec<OsString>) -> Result<std::result::Result<Cli, clap::Error>> {
    let argv = config::merge_config(argv)?;
    Ok(Cli::try_parse_from(argv))
}

/// Guess the requested format before parsing succeeds, for error output.
fn sniff_format(argv: &[OsString]) -> Format {
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into()).collect();
    for (i, a) in args.iter().enumerate() {
        let v = if a == "--format" {
            args.get(i + 1).map(String::as_str)
        } else {
            a.strip_prefix("--format=")
        };
        match v {
            Some("csv") => return Format::Csv,
            Some("text") => return Format::Text,
            Some("json") => return Format::Json,
            _ => {}
        }
    }
    Format::Json
}

fn emit_error(e: &CliError, format: Format, out: &mut impl Write, err: &mut impl Write) -> i32 {
    if format == Format::Json {
        let obj = serde_json::to_string_pretty(&e.to_object()).unwrap_or_default();
        let _ = writeln!(out, "{obj}");
    }
    let _ = writeln!(err, "error[{}]: {e}", e.code());
    e.exit_code()
}

/// Runs one invocation and returns the process exit status.
pub fn run(argv: Vec<OsString>, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let format_hint = sniff_format(&argv);
    let cli = match parse(argv) {
        Ok(Ok(cli)) => cli,
        Ok(Err(e)) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(out, "{}", e.render());
            return 0;
        }
        Ok(Err(e)) => {
            let e = CliError::Usage(e.render().to_string().trim_end().to_string());
            return emit_error(&e, format_hint, out, err);
        }
        Err(e) => return emit_error(&e, format_hint, out, err),
    };
    let format = cli
        .format
        .unwrap_or_else(|| commands::default_format(&cli.command));
    let rendered = run_command(&cli.command).and_then(|r| r.render(format));
    match rendered {
        Ok(text) => match &cli.out {
            Some(path) => match std::fs::write(path, text) {
                Ok(()) => 0,
                Err(e) => emit_error(&CliError::io(path, e), format, out, err),
            },
            None => {
                let _ = out.write_all(text.as_bytes());
                0
            }
        },
        Err(e) => emit_error(&e, format, out, err),
    }
}
