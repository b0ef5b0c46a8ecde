use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// Writes through a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let temp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&temp, bytes).with_context(|| format!("writing {}", temp.display()))?;
    fs::rename(&temp, path).with_context(|| format!("renaming {} to {}", temp.display(), path.display()))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV with a header row and one row per sample.
pub fn csv(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(number).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// File-name-safe rendering of an observer expression.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' => out.push(c),
            '^' => out.push_str("pow"),
            '*' => out.push('_'),
            '+' => out.push_str("_plus_"),
            '-' => out.push_str("_minus_"),
            '/' => out.push_str("_over_"),
            _ => {}
        }
    }
    if out.is_empty() {
        out.push_str("observer");
    }
    out
}
