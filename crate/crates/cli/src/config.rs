//! `--config` files: `key = value` lines, `#` comments, optional `[subcommand]`
//! sections. Top-level keys apply to whichever subcommand accepts them;
//! section keys must be valid for their subcommand. Anything set explicitly
//! on the command line wins.

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Command};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub section: Option<String>,
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, String> {
    let mut section = None;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(name.trim().to_string());
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let value = v.trim();
        let value = value.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(value);
        out.push(Entry { section: section.clone(), key: k.trim().replace('_', "-"), value: value.to_string(), line: i + 1 });
    }
    Ok(out)
}

/// Extra argv entries for the active subcommand.
pub fn to_args(entries: &[Entry], root: &Command, top: &ArgMatches, sub: &str, sub_matches: &ArgMatches) -> Result<Vec<String>, String> {
    let sub_cmd = root.find_subcommand(sub).ok_or_else(|| format!("unknown subcommand {sub}"))?;
    let mut args = Vec::new();
    for e in entries {
        if e.section.as_deref().is_some_and(|s| s != sub) {
            continue;
        }
        let found = sub_cmd
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(e.key.as_str()));
        let Some(arg) = found else {
            if e.section.is_some() {
                return Err(format!("config line {}: `{sub}` has no option --{}", e.line, e.key));
            }
            log::debug!("config key {} does not apply to {sub}", e.key);
            continue;
        };
        if e.key == "config" {
            return Err(format!("config line {}: config files cannot include others", e.line));
        }
        let explicit = [top, sub_matches].iter().any(|m| {
            m.try_get_raw(arg.get_id().as_str()).is_ok() && m.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine)
        });
        if explicit {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match e.value.as_str() {
                "true" => args.push(format!("--{}", e.key)),
                "false" => {}
                v => return Err(format!("config line {}: {} expects true or false, got {v}", e.line, e.key)),
            },
            _ => {
                args.push(format!("--{}", e.key));
                args.push(e.value.clone());
            }
        }
    }
    Ok(args)
}
