//! Run parameters: built-in defaults, an optional flat `key = value` file and
//! command-line overrides, resolved in that order of increasing precedence.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

/// Bad configuration or command line. Maps to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Flag,
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::Default => "default",
            Source::File => "config",
            Source::Flag => "flag",
        }
    }
}

/// Declared parameter: key, default value and a one-line description.
pub type Decl = (&'static str, &'static str, &'static str);

/// Resolved parameters in declaration order.
#[derive(Clone, Debug)]
pub struct Params {
    entries: Vec<(&'static str, String, Source)>,
}

impl Params {
    /// Resolves `decls` against the config file at `path` (if any) and then
    /// against `overrides`. Keys not in `decls` are rejected.
    pub fn resolve(
        decls: &[Decl],
        path: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<Self, UsageError> {
        let mut entries: Vec<(&'static str, String, Source)> =
            decls.iter().map(|&(k, v, _)| (k, v.to_string(), Source::Default)).collect();
        let mut set = |key: &str, value: &str, source: Source| -> Result<(), UsageError> {
            let key = normalize(key);
            match entries.iter_mut().find(|e| e.0 == key) {
                Some(e) => {
                    e.1 = value.to_string();
                    e.2 = source;
                    Ok(())
                }
                None => usage(format!(
                    "unknown key {key:?}; accepted keys: {}",
                    decls.iter().map(|d| d.0).collect::<Vec<_>>().join(", ")
                )),
            }
        };
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
            for (key, value) in parse_config(&text)? {
                set(&key, &value, Source::File)
                    .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
            }
        }
        for (key, value) in overrides {
            set(key, value, Source::Flag)?;
        }
        Ok(Self { entries })
    }

    pub fn raw(&self, key: &str) -> &str {
        self.entries
            .iter()
            .find(|e| e.0 == key)
            .map(|e| e.1.as_str())
            .unwrap_or_else(|| panic!("undeclared parameter {key}"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, UsageError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        raw.trim()
            .parse()
            .map_err(|e| UsageError(format!("invalid value {raw:?} for {key}: {e}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, UsageError> {
        let v: f64 = self.get(key)?;
        if !v.is_finite() {
            return usage(format!("{key} must be finite, got {v}"));
        }
        Ok(v)
    }

    pub fn count(&self, key: &str, min: usize) -> Result<usize, UsageError> {
        let v: usize = self.get(key)?;
        if v < min {
            return usage(format!("{key} must be at least {min}, got {v}"));
        }
        Ok(v)
    }

    /// `# key = value` lines, one per parameter, in declaration order.
    pub fn header_lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|(k, v, s)| format!("{k} = {} ({})", v.trim(), s.name()))
            .collect()
    }
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// ignored; repeated keys are an error.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, UsageError> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut seen = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return usage(format!("line {}: expected key = value, got {line:?}", i + 1));
        };
        let key = normalize(key);
        if key.is_empty() {
            return usage(format!("line {}: empty key", i + 1));
        }
        if let Some(prev) = seen.insert(key.clone(), i + 1) {
            return usage(format!("line {}: key {key:?} already set on line {prev}", i + 1));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// Splits trailing `--key value` and `--key=value` arguments into pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, UsageError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return usage(format!("unexpected argument {arg:?}; overrides take the form --key value"));
        };
        match flag.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => match it.next() {
                Some(v) => out.push((flag.to_string(), v.clone())),
                None => return usage(format!("missing value for --{flag}")),
            },
        }
    }
    Ok(out)
}
