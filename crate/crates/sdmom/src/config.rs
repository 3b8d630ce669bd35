//! `key=value` configuration files.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parse `key=value` lines. `#` starts a comment; blank lines are skipped;
/// a repeated key keeps its last value.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key=value, found {line:?}") })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse { line: i + 1, msg: "empty key".into() });
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Parsed settings with typed accessors. Keys must be known to the command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(Self { map: parse_kv(text)? })
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Apply `key=value` overrides, e.g. from the command line.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            self.map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.map.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|s| s.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {s:?}"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Config(format!("missing key {key:?}")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|s| {
                s.split(',')
                    .map(|t| t.trim().parse().map_err(|_| Error::Config(format!("{key}: cannot parse {t:?}"))))
                    .collect()
            })
            .transpose()
    }

    /// Fail on any key outside `known`.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        match self.map.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!("unknown key {k:?}"))),
            None => Ok(()),
        }
    }

    /// Canonical `key=value` text, sorted by key.
    pub fn canonical(&self) -> String {
        self.map.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blanks_and_overrides() {
        let mut s = Settings::parse("# header\n\nd = 3  # dimension\nn_values=1000,4000\nd=4\n").unwrap();
        assert_eq!(s.get::<usize>("d").unwrap(), Some(4));
        assert_eq!(s.list::<usize>("n_values").unwrap(), Some(vec![1000, 4000]));
        s.apply_overrides(&["d=7"]).unwrap();
        assert_eq!(s.require::<usize>("d").unwrap(), 7);
        assert!(s.check_known(&["d"]).is_err());
        assert!(s.check_known(&["d", "n_values"]).is_ok());
        assert!(Settings::parse("novalue").is_err());
        assert!(s.get::<usize>("n_values").is_err());
    }
}
