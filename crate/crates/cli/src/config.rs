//! Flat `key = value` run configuration; keys mirror the long flag names.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::CliError;

pub const KEYS: &[&str] = &[
    "metric",
    "family",
    "c1",
    "c2",
    "c3",
    "a",
    "b",
    "rho",
    "sigma",
    "t0",
    "closed-form",
    "point",
    "grid",
    "xbox",
    "wedge",
    "slopes",
    "tol-berwald",
    "tol-landsberg",
    "tol-degeneracy",
    "seed",
    "suite",
    "json",
    "csv",
    "report",
];

/// Effective settings of one run. Ordered, so the echo is stable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {}: expected key = value, got '{raw}'",
                    n + 1
                )));
            };
            let key = k.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key '{key}'",
                    n + 1
                )));
            }
            values.insert(key.to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    /// Sets `key` unless `value` is `None`; flags override the file this way.
    pub fn set(&mut self, key: &str, value: Option<String>) {
        debug_assert!(KEYS.contains(&key), "{key}");
        if let Some(v) = value {
            self.values.insert(key.to_string(), v);
        }
    }

    pub fn set_default(&mut self, key: &str, value: &str) {
        self.values
            .entry(key.to_string())
            .or_insert_with(|| value.to_string());
    }

    /// Drops every key not in `keep`.
    pub fn retain(&mut self, keep: &[&str]) {
        self.values.retain(|k, _| keep.contains(&k.as_str()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Usage(format!("missing --{key}")))
    }

    pub fn typed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Usage(format!("--{key}: cannot parse '{v}'")))
            })
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(CliError::Usage(format!(
                "--{key}: expected true or false, got '{v}'"
            ))),
        }
    }

    /// A comma-separated list of exactly `N` values.
    pub fn list<T: FromStr, const N: usize>(&self, key: &str) -> Result<Option<[T; N]>, CliError> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let bad = || {
            CliError::Usage(format!(
                "--{key}: expected {N} comma-separated values, got '{v}'"
            ))
        };
        let parts: Vec<T> = v
            .split(',')
            .map(|p| p.trim().parse::<T>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        parts.try_into().map(Some).map_err(|_| bad())
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.values {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_parses_back() {
        let c =
            RunConfig::parse("# comment\nmetric = sqrt(1+u^2)\ngrid = 4,4,4\n\nseed=3\n").unwrap();
        assert_eq!(c.get("metric"), Some("sqrt(1+u^2)"));
        assert_eq!(RunConfig::parse(&c.to_string()).unwrap(), c);
        assert_eq!(c.list::<usize, 3>("grid").unwrap(), Some([4, 4, 4]));
        assert_eq!(c.typed::<u64>("seed").unwrap(), Some(3));
    }

    #[test]
    fn flags_override_file() {
        let mut c = RunConfig::parse("seed = 1").unwrap();
        c.set("seed", Some("2".into()));
        c.set("seed", None);
        assert_eq!(c.get("seed"), Some("2"));
    }

    #[test]
    fn unknown_keys_and_bad_lists_are_usage_errors() {
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("no equals sign").is_err());
        let c = RunConfig::parse("grid = 1,2").unwrap();
        assert!(c.list::<usize, 3>("grid").is_err());
    }
}
