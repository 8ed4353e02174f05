//! Flat `key = value` config files, merged in front of the command-line
//! flags so that the flags win.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

const SUBCOMMANDS: [&str; 5] = ["spectrum", "sweep", "surface", "trace", "fit"];

#[derive(Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub entries: Vec<(String, String)>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    let mut cfg = ConfigFile::default();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected `key = value`", no + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() || key.starts_with('-') {
            return Err(CliError::Config(format!("config line {}: bad key `{key}`", no + 1)));
        }
        match key.as_str() {
            "command" => cfg.command = Some(value),
            "config" => return Err(CliError::Config("config files cannot include other config files".into())),
            _ => cfg.entries.push((key, value)),
        }
    }
    Ok(cfg)
}

/// Rewrites `argv` so that entries of the file named by `--config` come
/// right after the subcommand, ahead of the explicit flags.
pub fn expand_argv(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut rest: Vec<OsString> = Vec::with_capacity(argv.len());
    let mut config_path: Option<OsString> = None;
    let mut iter = argv.into_iter();
    let bin = iter.next().unwrap_or_else(|| "ptmathieu".into());
    while let Some(arg) = iter.next() {
        match arg.to_str() {
            Some("--config") => {
                let path = iter
                    .next()
                    .ok_or_else(|| CliError::Config("--config needs a path".into()))?;
                config_path = Some(path);
            }
            Some(s) if s.starts_with("--config=") => config_path = Some(s["--config=".len()..].into()),
            _ => rest.push(arg),
        }
    }
    let Some(path) = config_path else {
        let mut out = vec![bin];
        out.extend(rest);
        return Ok(out);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;

    let pos = rest
        .iter()
        .position(|a| a.to_str().is_some_and(|s| SUBCOMMANDS.contains(&s)));
    let (leading, command, trailing) = match (pos, cfg.command) {
        (Some(i), _) => {
            let trailing = rest.split_off(i + 1);
            let command = rest.pop().expect("subcommand present");
            (rest, command, trailing)
        }
        (None, Some(c)) => (Vec::new(), OsString::from(c), rest),
        (None, None) => {
            return Err(CliError::Config(
                "no subcommand on the command line or `command` in the config file".into(),
            ))
        }
    };
    let mut out = vec![bin];
    out.extend(leading);
    out.push(command);
    for (key, value) in cfg.entries {
        out.push(format!("--{key}").into());
        out.push(value.into());
    }
    out.extend(trailing);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[OsString]) -> Vec<&str> {
        v.iter().map(|s| s.to_str().unwrap()).collect()
    }

    #[test]
    fn parses_flat_file() {
        let cfg = parse_config("# comment\ncommand = trace\n\ndelta_grid = 0:3:0.02\nbc=\"dirichlet\"\n").unwrap();
        assert_eq!(cfg.command.as_deref(), Some("trace"));
        assert_eq!(
            cfg.entries,
            vec![
                ("delta-grid".to_string(), "0:3:0.02".to_string()),
                ("bc".to_string(), "dirichlet".to_string())
            ]
        );
        assert!(parse_config("no equals sign").is_err());
        assert!(parse_config("config = other.toml").is_err());
    }

    #[test]
    fn flags_follow_file_entries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "command = spectrum\nq = 1\nk = 4\n").unwrap();
        let argv: Vec<OsString> = ["ptmathieu", "--config", path.to_str().unwrap(), "--k", "2"]
            .iter()
            .map(OsString::from)
            .collect();
        let out = expand_argv(argv).unwrap();
        assert_eq!(strs(&out), ["ptmathieu", "spectrum", "--q", "1", "--k", "4", "--k", "2"]);

        let argv: Vec<OsString> = ["ptmathieu", "-v", "trace", "--config", path.to_str().unwrap(), "--j", "2"]
            .iter()
            .map(OsString::from)
            .collect();
        let out = expand_argv(argv).unwrap();
        assert_eq!(strs(&out), ["ptmathieu", "-v", "trace", "--q", "1", "--k", "4", "--j", "2"]);
    }

    #[test]
    fn missing_file_is_a_config_error() {
        let argv = ["ptmathieu", "--config", "/nonexistent/cfg"].iter().map(OsString::from).collect();
        assert!(matches!(expand_argv(argv), Err(CliError::Config(_))));
    }
}
