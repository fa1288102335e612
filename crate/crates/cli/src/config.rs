//! Flat `key = value` config files, expanded into command-line flags.
//!
//! Config values are inserted right after the subcommand name, so flags given
//! on the command line come later and win.

use std::ffi::OsString;
use std::fs;

use clap::Command;

/// Removes `--config PATH` from `args` and splices the file's settings in as flags.
pub fn expand(args: Vec<OsString>, cmd: &Command) -> Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| format!("config {}: {e}", path.to_string_lossy()))?;
    let entries = parse(&text)?;

    let Some(pos) = rest.iter().skip(1).position(|a| cmd.find_subcommand(a).is_some()).map(|p| p + 1) else {
        return Ok(rest);
    };
    let sub = cmd.find_subcommand(&rest[pos]).expect("found above");
    let mut inserted = Vec::new();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()));
        let Some(arg) = arg else {
            let known = cmd.get_subcommands().any(|s| s.get_arguments().any(|a| a.get_long() == Some(key.as_str())));
            if known {
                continue;
            }
            return Err(format!("config: unknown key {key}"));
        };
        if arg.get_action().takes_values() {
            inserted.push(OsString::from(format!("--{key}")));
            inserted.push(OsString::from(value));
        } else {
            match value.as_str() {
                "true" | "yes" | "1" => inserted.push(OsString::from(format!("--{key}"))),
                "false" | "no" | "0" => {}
                other => return Err(format!("config: {key} expects true or false, got {other}")),
            }
        }
    }
    rest.splice(pos + 1..pos + 1, inserted);
    Ok(rest)
}

fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key = value", ln + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let e = parse("# top\n\nrule1 = minchange  # trailing\njobs=2\n").unwrap();
        assert_eq!(e, vec![("rule1".into(), "minchange".into()), ("jobs".into(), "2".into())]);
        assert!(parse("novalue\n").is_err());
    }
}
