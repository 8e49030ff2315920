//! `key = value` configuration files.
//!
//! Each entry becomes `--key value` appended to the command line unless the
//! flag is already present there. Keys unknown to the running subcommand
//! but accepted by another one are ignored, so one file can serve the whole
//! pipeline; keys no subcommand accepts are errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::{Cli, CliError, CliResult};

/// Parses the file into `(key, value, line)` triples, keys normalized to
/// flag spelling (`_` becomes `-`).
pub(crate) fn parse(text: &str) -> Result<Vec<(String, String, usize)>, String> {
    let mut out: Vec<(String, String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`", i + 1));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        if let Some((_, _, first)) = out.iter().find(|(k, _, _)| *k == key) {
            return Err(format!("line {}: key {key} already set on line {first}", i + 1));
        }
        out.push((key, value, i + 1));
    }
    Ok(out)
}

fn long_names(cmd: &clap::Command) -> BTreeSet<String> {
    cmd.get_arguments()
        .filter_map(|a| a.get_long())
        .map(str::to_string)
        .collect()
}

pub(crate) fn arguments_from_file(path: &Path, cli: &Cli, args: &[OsString]) -> CliResult<Vec<OsString>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let entries = parse(&text).map_err(|m| CliError::Usage(format!("{}: {m}", path.display())))?;

    let root = Cli::command();
    let mut current = long_names(&root);
    current.remove("config");
    let sub = root
        .find_subcommand(cli.command.name())
        .expect("parsed subcommand exists");
    current.extend(long_names(sub));
    let anywhere: BTreeSet<String> = root.get_subcommands().flat_map(long_names).collect();

    let given = |key: &str| {
        let flag = format!("--{key}");
        let prefix = format!("--{key}=");
        args.iter()
            .filter_map(|a| a.to_str())
            .any(|a| a == flag || a.starts_with(&prefix))
    };

    let mut extra = Vec::new();
    for (key, value, line) in entries {
        if key == "config" {
            return Err(CliError::Usage(format!("{}:{line}: config files cannot nest", path.display())));
        }
        if current.contains(&key) {
            if !given(&key) {
                extra.push(OsString::from(format!("--{key}={value}")));
            }
        } else if !anywhere.contains(&key) {
            return Err(CliError::Usage(format!("{}:{line}: unknown key {key}", path.display())));
        }
    }
    Ok(extra)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_files() {
        let entries = parse("# comment\n\nbeta = 20\nrun_tag=x = y\n").unwrap();
        assert_eq!(
            entries,
            vec![("beta".into(), "20".into(), 3), ("run-tag".into(), "x = y".into(), 4)]
        );
        assert!(parse("beta\n").is_err());
        assert!(parse("= 3\n").is_err());
        assert!(parse("beta = 1\nbeta = 2\n").is_err());
    }
}
