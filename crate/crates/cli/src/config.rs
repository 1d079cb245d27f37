//! TOML defaults merged into the argument vector.
//!
//! Top-level keys apply to every subcommand, keys under `[<subcommand>]` to
//! that one only. A key becomes `--key value` and is dropped when the same
//! flag is already on the command line.

use std::path::Path;

use crate::error::{config, CliResult};

/// Remove `--config <path>` from `argv` and return the path.
pub fn take_config_flag(argv: &mut Vec<String>) -> CliResult<Option<String>> {
    let mut i = 1;
    while i < argv.len() {
        if argv[i] == "--config" {
            if i + 1 >= argv.len() {
                return Err(config("--config needs a path"));
            }
            let p = argv.remove(i + 1);
            argv.remove(i);
            return Ok(Some(p));
        }
        if let Some(p) = argv[i].strip_prefix("--config=") {
            let p = p.to_string();
            argv.remove(i);
            return Ok(Some(p));
        }
        i += 1;
    }
    Ok(None)
}

fn scalar(key: &str, v: &toml::Value) -> CliResult<Option<String>> {
    Ok(match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(f.to_string()),
        toml::Value::Boolean(true) => None,
        toml::Value::Boolean(false) => return Ok(Some(String::new())),
        toml::Value::Array(a) => Some(
            a.iter()
                .map(|x| match x {
                    toml::Value::Integer(i) => Ok(i.to_string()),
                    toml::Value::Float(f) => Ok(f.to_string()),
                    toml::Value::String(s) => Ok(s.clone()),
                    _ => Err(config(format!("unsupported array entry for {key}"))),
                })
                .collect::<CliResult<Vec<_>>>()?
                .join(","),
        ),
        _ => return Err(config(format!("unsupported value for {key}"))),
    })
}

fn present(argv: &[String], flag: &str) -> bool {
    argv.iter().any(|a| a == flag || a.starts_with(&format!("{flag}=")))
}

/// Insert defaults from `text` after the subcommand token.
pub fn merge(argv: &mut Vec<String>, text: &str) -> CliResult<()> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| config(format!("config file: {e}")))?;
    let Some(pos) = argv.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(());
    };
    let sub = argv[pos].clone();
    let mut extra = Vec::new();
    let mut add = |key: &str, v: &toml::Value, argv: &[String]| -> CliResult<()> {
        let flag = format!("--{}", key.replace('_', "-"));
        if present(argv, &flag) {
            return Ok(());
        }
        match scalar(key, v)? {
            None => extra.push(flag),
            Some(s) if s.is_empty() => {}
            Some(s) => {
                extra.push(flag);
                extra.push(s);
            }
        }
        Ok(())
    };
    for (k, v) in &table {
        if !v.is_table() {
            add(k, v, argv)?;
        }
    }
    if let Some(toml::Value::Table(t)) = table.get(&sub) {
        for (k, v) in t {
            add(k, v, argv)?;
        }
    }
    for (i, a) in extra.into_iter().enumerate() {
        argv.insert(pos + 1 + i, a);
    }
    Ok(())
}

pub fn load(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| config(format!("cannot read config {}: {e}", path.display())))
}
