//! Flat `key = value` configuration files.
//!
//! ```text
//! # comments start with '#'
//! rate = 0.2
//! variant = mention+token
//! normalize_tail_labels = true
//! ```
//!
//! Keys are the long flag names of the subcommand, with `-` or `_`. Boolean
//! flags take `true` or `false`. A key whose flag is already on the command
//! line is ignored, so flags take precedence over the file.

use std::ffi::OsString;
use std::path::Path;

use anyhow::Context as _;
use clap::CommandFactory;

use crate::{usage, Cli};

/// Parsed `key = value` pairs in file order, keys normalised to dashes.
pub fn parse(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(usage(format!("config line {}: expected key = value", i + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        if key.is_empty() {
            return Err(usage(format!("config line {}: empty key", i + 1)));
        }
        out.push((key, value.to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<(usize, OsString)> {
    for (i, a) in args.iter().enumerate().skip(1) {
        let s = a.to_string_lossy();
        if s == "--config" {
            return args.get(i + 1).map(|p| (i, p.clone()));
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some((i, OsString::from(p)));
        }
    }
    None
}

fn subcommand(args: &[OsString]) -> Option<String> {
    let mut skip = false;
    for a in args.iter().skip(1) {
        let s = a.to_string_lossy();
        if skip {
            skip = false;
            continue;
        }
        if s == "--config" {
            skip = true;
            continue;
        }
        if !s.starts_with('-') {
            return Some(s.into_owned());
        }
    }
    None
}

fn on_command_line(args: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let with_value = format!("--{long}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_value)
    })
}

/// Append flags from the `--config` file that are not already given.
pub fn merge(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some((_, path)) = config_path(&args) else {
        return Ok(args);
    };
    let Some(name) = subcommand(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let command = Cli::command();
    let Some(sub) = command.find_subcommand(&name) else {
        return Ok(args);
    };
    let mut merged = args.clone();
    for (key, value) in parse(&text)? {
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            return Err(usage(format!("config key `{key}` is not a flag of `{name}`")));
        };
        if key == "config" || on_command_line(&args, &key) {
            continue;
        }
        if arg.get_action().takes_values() {
            merged.push(format!("--{key}").into());
            merged.push(value.into());
        } else {
            match value.as_str() {
                "true" => merged.push(format!("--{key}").into()),
                "false" => {}
                other => return Err(usage(format!("config key `{key}` expects true or false, got `{other}`"))),
            }
        }
    }
    Ok(merged)
}
