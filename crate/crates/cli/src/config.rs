//! Merges a TOML config file into the command line.
//!
//! Keys mirror long flag names (`max_tokens` or `max-tokens`). Top-level
//! keys apply to every subcommand that has the flag; a `[<subcommand>]`
//! table applies to that subcommand only. Values from the file are placed
//! before the user's own flags, so the command line wins.

use std::ffi::OsString;
use std::path::Path;

use toml::{Table, Value};

const GLOBAL_KEYS: [&str; 1] = ["jobs"];
const GLOBAL_WITH_VALUE: [&str; 2] = ["--config", "--jobs"];

/// Path given via `--config`, if any.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter().skip(1);
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Index of the subcommand name in `args`.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if GLOBAL_WITH_VALUE.contains(&s.as_ref()) {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn flag(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

fn push_value(out: &mut Vec<OsString>, key: &str, value: &Value) -> Result<(), String> {
    match value {
        Value::Boolean(true) => out.push(flag(key).into()),
        Value::Boolean(false) => {}
        Value::String(s) => out.push(format!("{}={s}", flag(key)).into()),
        Value::Integer(n) => out.push(format!("{}={n}", flag(key)).into()),
        Value::Float(x) => out.push(format!("{}={x}", flag(key)).into()),
        Value::Array(items) => {
            for item in items {
                push_value(out, key, item)?;
            }
        }
        other => return Err(format!("config key `{key}`: unsupported value {other}")),
    }
    Ok(())
}

/// Returns `args` with the config file's flags spliced in.
pub fn merge(
    args: Vec<OsString>,
    config: &Table,
    accepts: impl Fn(&str, &str) -> bool,
) -> Result<Vec<OsString>, String> {
    let Some(sub) = subcommand_index(&args) else {
        return Ok(args);
    };
    let sub_name = args[sub].to_string_lossy().into_owned();
    let mut global = Vec::new();
    let mut local = Vec::new();
    for (key, value) in config {
        match value {
            Value::Table(table) if key.replace('_', "-") == sub_name => {
                for (k, v) in table {
                    push_value(&mut local, k, v)?;
                }
            }
            Value::Table(_) => {}
            _ if GLOBAL_KEYS.contains(&key.as_str()) => push_value(&mut global, key, value)?,
            _ if accepts(&sub_name, &key.replace('_', "-")) => push_value(&mut local, key, value)?,
            _ => {}
        }
    }
    let mut out = Vec::with_capacity(args.len() + global.len() + local.len());
    out.push(args[0].clone());
    out.extend(global);
    out.extend(args[1..=sub].iter().cloned());
    out.extend(local);
    out.extend(args[sub + 1..].iter().cloned());
    Ok(out)
}

pub fn load(path: &Path) -> Result<Table, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.parse::<Table>().map_err(|e| format!("{}: {e}", path.display()))
}
