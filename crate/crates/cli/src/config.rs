//! `--config FILE`: `key=value` lines spliced in ahead of the command-line
//! flags, so the flags win.

use std::ffi::OsString;
use std::path::Path;

use crate::args::Command;
use crate::error::{CliError, Result};

/// `(key, value)` pairs in file order. Blank lines and `#` comments are
/// skipped; keys may carry a leading `--`.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config {
            line: i + 1,
            message: format!("expected key=value, got `{line}`"),
        })?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Config {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// `--h` abbreviates `--bandwidth` for the fitting commands only.
fn canonical(key: &str, command: &str) -> String {
    match (key, command) {
        ("h", "ci" | "rdd") => "bandwidth".to_string(),
        _ => key.to_string(),
    }
}

/// Long flags present on the command line; a flag given there replaces the
/// config entry outright, list-valued ones included.
fn flags_given(args: &[OsString], command: &str) -> Vec<String> {
    args.iter()
        .filter_map(|a| {
            let s = a.to_string_lossy();
            let name = s.strip_prefix("--")?;
            let name = name.split('=').next().unwrap_or(name);
            Some(canonical(name, command))
        })
        .collect()
}

/// `argv` with the config entries inserted right after the subcommand.
/// A `command` key names the subcommand when the command line omits it.
pub fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text =
        std::fs::read_to_string(Path::new(&path)).map_err(|e| CliError::io(Path::new(&path), e))?;
    let entries = parse_config(&text)?;
    let mut argv = argv;
    let pos = match argv
        .iter()
        .skip(1)
        .position(|a| Command::NAMES.contains(&a.to_string_lossy().as_ref()))
    {
        Some(p) => p + 1,
        None => {
            let cmd = entries
                .iter()
                .find(|(k, _)| k == "command")
                .map(|(_, v)| v.clone())
                .ok_or_else(|| CliError::Usage("no subcommand given".into()))?;
            argv.push(cmd.into());
            argv.len() - 1
        }
    };
    let command = argv[pos].to_string_lossy().to_string();
    let given = flags_given(&argv[pos + 1..], &command);
    let injected: Vec<OsString> = entries
        .into_iter()
        .filter(|(k, v)| {
            k != "command"
                && k != "config"
                && v != "false"
                && !given.contains(&canonical(k, &command))
        })
        .map(|(k, v)| {
            if v == "true" {
                format!("--{k}").into()
            } else {
                format!("--{k}={v}").into()
            }
        })
        .collect();
    argv.splice(pos + 1..pos + 1, injected);
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn merged(cmdline: &[&str], cfg: &str) -> Vec<String> {
        let dir = std::env::temp_dir().join(format!("npreg-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("{}.cfg", cmdline.len()));
        std::fs::write(&path, cfg).unwrap();
        let mut argv: Vec<OsString> = vec!["npreg".into(), "--config".into(), path.clone().into()];
        argv.extend(cmdline.iter().map(OsString::from));
        let out = merge_config(argv).unwrap();
        std::fs::remove_file(&path).unwrap();
        out.iter()
            .skip(3)
            .map(|a| a.to_string_lossy().into())
            .collect()
    }

    #[test]
    fn command_line_wins() {
        let m = merged(
            &["ci", "--h", "0.3"],
            "bandwidth=0.2\nmethod=mplp\nall=false\n",
        );
        assert_eq!(m, ["ci", "--method=mplp", "--h", "0.3"]);
        let m = merged(&["simulate", "--h", "f.txt"], "bandwidth=0.2\n");
        assert_eq!(m, ["simulate", "--bandwidth=0.2", "--h", "f.txt"]);
        let m = merged(&[], "command=constants\nall=true\n");
        assert_eq!(m, ["constants", "--all"]);
    }

    #[test]
    fn parses_pairs_and_comments() {
        let e =
            parse_config("# sweep\nbandwidth = 0.2\n\n--kernel=triangular\nhc_type=hc2\n").unwrap();
        assert_eq!(
            e,
            vec![
                ("bandwidth".into(), "0.2".into()),
                ("kernel".into(), "triangular".into()),
                ("hc-type".into(), "hc2".into())
            ]
        );
        assert!(matches!(
            parse_config("ok=1\nnonsense\n"),
            Err(CliError::Config { line: 2, .. })
        ));
    }
}
