//! Config files supply flags. Top-level keys are global flags; a table named
//! after a subcommand supplies that subcommand's flags:
//!
//! ```toml
//! budget-dense = 1000
//!
//! [simulate]
//! kind = "noisy1"
//! trials = 64
//! ```
//!
//! The file's flags are spliced into the argument list right after the
//! subcommand and ahead of everything typed on the command line, so with
//! `args_override_self` the command line wins.

use std::ffi::OsString;
use std::fs;

use anyhow::{bail, Context, Result};
use toml::{Table, Value};

/// Global flags that consume a following value.
const VALUE_GLOBALS: [&str; 4] = ["--budget-vertices", "--budget-dense", "--out-dir", "--config"];

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(path) = s.strip_prefix("--config=") {
            return Some(path.into());
        }
    }
    None
}

/// Index of the subcommand token, skipping values of global flags.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if VALUE_GLOBALS.contains(&s.as_ref()) {
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

fn flag_name(key: &str) -> String {
    if key.chars().count() == 1 {
        format!("-{key}")
    } else {
        format!("--{}", key.replace('_', "-"))
    }
}

fn scalar(key: &str, v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        other => bail!("config key '{key}' has unsupported value {other}"),
    })
}

fn push_flags(out: &mut Vec<OsString>, table: &Table) -> Result<()> {
    for (key, value) in table {
        match value {
            Value::Table(_) => continue,
            Value::Boolean(true) => out.push(flag_name(key).into()),
            Value::Boolean(false) => {}
            Value::Array(items) => {
                let parts = items.iter().map(|v| scalar(key, v)).collect::<Result<Vec<_>>>()?;
                out.push(flag_name(key).into());
                out.push(parts.join(",").into());
            }
            other => {
                out.push(flag_name(key).into());
                out.push(scalar(key, other)?.into());
            }
        }
    }
    Ok(())
}

/// Rewrites `args` with the flags from `--config FILE`, if given.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(sub) = subcommand_index(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.to_string_lossy()))?;
    let table: Table = text.parse().with_context(|| format!("parsing config {}", path.to_string_lossy()))?;

    let subcommand = args[sub].to_string_lossy().into_owned();
    let mut merged = vec![args[0].clone(), args[sub].clone()];
    push_flags(&mut merged, &table)?;
    if let Some(Value::Table(section)) = table.get(&subcommand) {
        push_flags(&mut merged, section)?;
    }
    merged.extend(args[1..sub].iter().cloned());
    merged.extend(args[sub + 1..].iter().cloned());
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    #[test]
    fn finds_subcommand_past_global_values() {
        let args = os(&["selfsim", "--budget-dense", "10", "--quiet", "metrics", "-n", "3"]);
        assert_eq!(subcommand_index(&args), Some(4));
        assert_eq!(subcommand_index(&os(&["selfsim", "--quiet"])), None);
    }

    #[test]
    fn splices_config_before_user_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(
            &path,
            "quiet = true\nbudget-dense = 5\n[metrics]\nfamily = \"sier\"\nn = 4\nk = 3\n[spectrum]\nexpand = true\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let merged = merge(os(&["selfsim", "--config", p, "metrics", "-n", "2"])).unwrap();
        let merged: Vec<String> = merged.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(merged[..2], ["selfsim", "metrics"]);
        let pos_cfg_n = merged.iter().position(|s| s == "4").unwrap();
        let pos_user_n = merged.iter().rposition(|s| s == "2").unwrap();
        assert!(pos_cfg_n < pos_user_n);
        assert!(merged.contains(&"--quiet".to_string()));
        assert!(!merged.contains(&"--expand".to_string()));
    }

    #[test]
    fn no_config_leaves_args_alone() {
        let args = os(&["selfsim", "metrics", "-n", "2"]);
        assert_eq!(merge(args.clone()).unwrap(), args);
    }
}
