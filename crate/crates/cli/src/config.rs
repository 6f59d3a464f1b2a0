//! Plain `key = value` configuration files.
//!
//! A file named by `--config PATH` supplies flags that are missing from the
//! command line; flags given explicitly always win. Keys are flag names with
//! `_` or `-` separators. The value `true` turns a key into a bare switch and
//! `false` drops it.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parses a config file into `(flag, value)` pairs in file order.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "config line {}: expected `key = value`, got `{raw}`",
                lineno + 1
            );
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') {
            bail!("config line {}: invalid key `{}`", lineno + 1, key);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn has_flag(args: &[OsString], flag: &str) -> bool {
    let long = format!("--{flag}");
    let prefix = format!("--{flag}=");
    args.iter().any(|a| {
        a.to_str()
            .is_some_and(|s| s == long || s.starts_with(&prefix))
    })
}

/// Removes `--config PATH` from `args` and appends the file's entries that
/// are not already present.
pub fn merge_config(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut k = 0;
    while k < args.len() {
        match args[k].to_str() {
            Some("--config") => {
                if k + 1 >= args.len() {
                    bail!("--config requires a path");
                }
                path = Some(args.remove(k + 1));
                args.remove(k);
            }
            Some(s) if s.starts_with("--config=") => {
                path = Some(OsString::from(&s["--config=".len()..]));
                args.remove(k);
            }
            _ => k += 1,
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config {}", Path::new(&path).display()))?;
    for (key, value) in parse_config(&text)? {
        if has_flag(&args, &key) || value == "false" {
            continue;
        }
        args.push(format!("--{key}").into());
        if value != "true" {
            args.push(value.into());
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_comments_and_separators() {
        let pairs = parse_config("# c\nlambda = 4\n\nstep_rule=fixed # trailing\n").unwrap();
        assert_eq!(
            pairs,
            vec![
                ("lambda".into(), "4".into()),
                ("step-rule".into(), "fixed".into())
            ]
        );
        assert!(parse_config("lambda 4").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(
            &cfg,
            "lambda = 4\niters = 10\nquiet = true\nverbose = false\n",
        )
        .unwrap();
        let args = os(&[
            "stvrecon",
            "denoise",
            "--lambda=2",
            "--config",
            cfg.to_str().unwrap(),
        ]);
        let merged = merge_config(args).unwrap();
        assert_eq!(
            merged,
            os(&[
                "stvrecon",
                "denoise",
                "--lambda=2",
                "--iters",
                "10",
                "--quiet"
            ])
        );
    }
}
