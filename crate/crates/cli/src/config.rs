//! `key=value` config files that supply default flags.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::{ArgAction, Command};

/// Settings read from a config file, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigFile {
    pub entries: Vec<(String, String)>,
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// ignored. Keys are long flag names (with `-` or `_`, optionally prefixed
/// by `--`) or single-letter short names such as `d` and `N`.
pub fn parse_config(text: &str) -> Result<ConfigFile, String> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got '{line}'", i + 1))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        let value = v.trim().trim_matches('"').to_string();
        entries.push((key, value));
    }
    Ok(ConfigFile { entries })
}

pub fn read_config(path: &Path) -> Result<ConfigFile, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Value of `--config` in raw arguments, if any.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn single_char(key: &str) -> Option<char> {
    let mut it = key.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

fn flag_names(cmd: &Command, out: &mut Vec<String>) {
    for a in cmd.get_arguments() {
        out.extend(a.get_long().map(str::to_string));
        out.extend(a.get_short().map(String::from));
    }
    for sub in cmd.get_subcommands() {
        flag_names(sub, out);
    }
}

/// Arguments with the config entries spliced in right after the subcommand
/// path, so that flags given explicitly (which come later) take precedence.
/// Entries for flags the selected subcommand does not have are skipped;
/// keys no subcommand knows are an error.
pub fn splice_config(
    root: &Command,
    args: &[OsString],
    cfg: &ConfigFile,
) -> Result<Vec<OsString>, String> {
    let mut known = Vec::new();
    flag_names(root, &mut known);

    let mut cmd = root;
    let mut at = 1;
    while at < args.len() {
        let tok = args[at].to_string_lossy();
        match cmd.find_subcommand(tok.as_ref()) {
            Some(sub) => {
                cmd = sub;
                at += 1;
            }
            None if tok == "--config" => at += 2,
            None if tok.starts_with("--config=") => at += 1,
            None => break,
        }
    }

    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in &cfg.entries {
        if key == "config" {
            return Err("a config file cannot name another config file".into());
        }
        let short = single_char(key);
        let Some(arg) = cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) || (short.is_some() && a.get_short() == short))
        else {
            if known.iter().any(|k| k == key) {
                continue;
            }
            return Err(format!("unknown config key '{key}'"));
        };
        let long = arg.get_long().unwrap_or(key);
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "1" | "yes" => extra.push(format!("--{long}").into()),
                "false" | "0" | "no" => {}
                other => {
                    return Err(format!("config key '{key}' expects true or false, got '{other}'"))
                }
            },
            _ => extra.push(format!("--{long}={value}").into()),
        }
    }

    let mut out = args[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

/// Makes repeated flags override each other (later wins) at every level.
pub fn override_self(cmd: Command) -> Command {
    let names: Vec<String> = cmd
        .get_subcommands()
        .map(|s| s.get_name().to_string())
        .collect();
    let mut cmd = cmd.args_override_self(true);
    for name in names {
        cmd = cmd.mut_subcommand(name, override_self);
    }
    cmd
}
