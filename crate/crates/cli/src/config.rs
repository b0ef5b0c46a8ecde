//! `key = value` config files with `[subcommand]` sections.
//!
//! File entries are turned into flags and spliced in after the subcommand
//! name, skipping any flag the command line already sets, so explicit flags
//! always win.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, Command};

/// Entries for `subcommand`: top-level keys first, overridden by its section.
pub fn load(path: &Path, subcommand: &str) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse(&text, subcommand).with_context(|| format!("in config {}", path.display()))
}

pub fn parse(text: &str, subcommand: &str) -> Result<Vec<(String, String)>> {
    let mut global = BTreeMap::new();
    let mut own = BTreeMap::new();
    let mut section: Option<String> = None;
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| anyhow!("line {}: unterminated section", number + 1))?;
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", number + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", number + 1);
        }
        let value = value.trim().to_string();
        match section.as_deref() {
            None => global.insert(key, value),
            Some(s) if s == subcommand => own.insert(key, value),
            Some(_) => None,
        };
    }
    global.extend(own);
    Ok(global.into_iter().collect())
}

/// Location of `--config` and of the subcommand name in `argv`.
pub struct Located {
    pub config: Option<String>,
    pub subcommand: Option<usize>,
}

pub fn locate(argv: &[String], subcommands: &[&str]) -> Located {
    let mut config = None;
    let mut subcommand = None;
    let mut i = 1;
    while i < argv.len() {
        let arg = &argv[i];
        if arg == "--config" {
            config = argv.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            config = Some(path.to_string());
        } else if subcommand.is_none() && subcommands.contains(&arg.as_str()) {
            subcommand = Some(i);
        }
        i += 1;
    }
    Located { config, subcommand }
}

/// Flags for `entries`, checked against the subcommand's arguments.
pub fn to_flags(command: &Command, entries: &[(String, String)], argv: &[String]) -> Result<Vec<String>> {
    let given = |flag: &str| argv.iter().any(|a| a == flag || a.starts_with(&format!("{flag}=")));
    let mut flags = Vec::new();
    for (key, value) in entries {
        let arg = command
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) || a.get_long().is_some_and(|l| format!("{l}s") == *key))
            .ok_or_else(|| anyhow!("unknown key `{key}` for `{}`", command.get_name()))?;
        let flag = format!("--{}", arg.get_long().unwrap());
        if given(&flag) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" => flags.push(flag),
                "false" => {}
                other => bail!("key `{key}` expects true or false, got `{other}`"),
            },
            ArgAction::Append => {
                for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    flags.push(flag.clone());
                    flags.push(item.to_string());
                }
            }
            _ => {
                flags.push(flag);
                flags.push(value.clone());
            }
        }
    }
    Ok(flags)
}
