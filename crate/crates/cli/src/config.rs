//! Config files and argument merging.
//!
//! A config file holds `key=value` lines whose keys are long flag names
//! (`nms-radius` or `nms_radius`). Its entries are inserted as flags right
//! after the subcommand, ahead of the user's own arguments; since every
//! flag overrides earlier occurrences of itself, the command line wins.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Extracts the value of `--config` from raw arguments.
pub fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Parses `key=value` lines. Blank lines and `#` comments are skipped;
/// list values use commas.
pub fn parse_config(text: &str, path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::input(format!("{}:{}: expected key=value", path.display(), i + 1))
        })?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::input(format!(
                "{}:{}: invalid key {:?}",
                path.display(),
                i + 1,
                k.trim()
            )));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Arguments with the config entries spliced in after the subcommand.
pub fn merged_args(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let entries = parse_config(&text, &path)?;
    // The subcommand is the first argument that is not a global flag.
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        match s.as_ref() {
            "--config" | "--threads" => i += 2,
            _ if s.starts_with('-') => i += 1,
            _ => break,
        }
    }
    if i >= args.len() {
        return Ok(args);
    }
    let mut merged = args[..=i].to_vec();
    merged.extend(
        entries
            .into_iter()
            .map(|(k, v)| OsString::from(format!("--{k}={v}"))),
    );
    merged.extend_from_slice(&args[i + 1..]);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn finds_config_flag() {
        assert_eq!(
            config_path(&os(&["x", "detect", "--config", "a.cfg"])),
            Some("a.cfg".into())
        );
        assert_eq!(
            config_path(&os(&["x", "--config=b.cfg", "eval"])),
            Some("b.cfg".into())
        );
        assert_eq!(config_path(&os(&["x", "detect", "--", "--config"])), None);
    }

    #[test]
    fn parses_lines() {
        let e = parse_config("# c\nnms_radius = 7\n\nthreshold=0.3\n", Path::new("f")).unwrap();
        assert_eq!(
            e,
            vec![
                ("nms-radius".into(), "7".into()),
                ("threshold".into(), "0.3".into())
            ]
        );
        assert!(parse_config("oops\n", Path::new("f")).is_err());
        assert!(parse_config("config=x\n", Path::new("f")).is_err());
    }
}
