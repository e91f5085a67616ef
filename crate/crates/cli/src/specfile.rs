//! Flat `key = value` spec files.
//!
//! ```text
//! # lines starting with '#' are comments
//! command = sweep
//! m = 4
//! powers = 0.1,0.5,1
//! strategy = bayesian
//! seed = 42
//! ```
//!
//! Keys are the long flag names without the leading `--`. List values are
//! comma separated. Flags given on the command line override the file.

use std::ffi::OsString;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, Result};

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Argument(format!("spec line {}: expected 'key = value', got '{line}'", n + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading spec {}", path.display()), e))?;
    parse(&text)
}

/// Long flags present in `argv` (`--name` or `--name=value`).
fn given_flags(argv: &[OsString]) -> Vec<String> {
    argv.iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect()
}

/// Inserts spec entries after the subcommand unless the flag already
/// appears in `argv`. `argv[0]` is the program, `argv[1]` the subcommand.
pub fn merge(argv: &[OsString], entries: &[(String, String)]) -> Result<Vec<OsString>> {
    let command = argv.get(1).and_then(|c| c.to_str()).unwrap_or_default().to_string();
    let given = given_flags(argv);
    let mut extra: Vec<OsString> = Vec::new();
    for (k, v) in entries {
        if k == "command" {
            if *v != command {
                return Err(CliError::Argument(format!(
                    "spec file is for '{v}', not '{command}'"
                )));
            }
            continue;
        }
        if matches!(k.as_str(), "spec" | "dump-spec" | "output") {
            return Err(CliError::Argument(format!("'{k}' cannot be set from a spec file")));
        }
        if given.contains(k) {
            continue;
        }
        extra.push(format!("--{k}={v}").into());
    }
    let mut merged = argv[..2.min(argv.len())].to_vec();
    merged.extend(extra);
    merged.extend(argv.iter().skip(2).cloned());
    Ok(merged)
}

/// Serializes the settings of a command into spec-file text.
pub fn dump<T: Serialize>(command: &str, settings: &T) -> Result<String> {
    let value = serde_json::to_value(settings)
        .map_err(|e| CliError::Argument(format!("cannot serialize settings: {e}")))?;
    let Value::Object(map) = value else {
        return Err(CliError::Argument("settings are not a key/value map".into()));
    };
    let mut text = format!("# adrx {command} spec\ncommand = {command}\n");
    for (k, v) in map {
        let rendered = match v {
            Value::Null => continue,
            Value::String(s) => s,
            Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(","),
            other => scalar(&other),
        };
        text.push_str(&format!("{k} = {rendered}\n"));
    }
    Ok(text)
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_and_merges() {
        let entries = parse("# c\ncommand = bench\nm = 8\npowers = 0.1,0.2\n\n").unwrap();
        assert_eq!(entries.len(), 3);
        let merged = merge(&os(&["adrx", "bench", "--m", "2"]), &entries).unwrap();
        assert_eq!(merged, os(&["adrx", "bench", "--powers=0.1,0.2", "--m", "2"]));
        assert!(merge(&os(&["adrx", "sweep"]), &entries).is_err());
        assert!(parse("no equals sign").is_err());
    }
}
