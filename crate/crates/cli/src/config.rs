//! `key = value` config files merged under command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            let key = k.trim().replace('_', "-");
            let v = v.trim().trim_matches('"');
            values.insert(key, v.to_string());
        }
        Ok(Self { values })
    }

    /// Flag value if given, else the config entry, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| anyhow!("config key `{key}`: cannot parse `{s}`")),
        }
    }

    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    /// Rejects keys that the running command does not understand.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.values.keys() {
            if !allowed.contains(&k.as_str()) {
                bail!("unknown config key `{k}`");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let c = Config::parse("epsilon = 0.25\n# comment\nt_min=-1\n").unwrap();
        assert_eq!(c.or(None, "epsilon", 0.5).unwrap(), 0.25);
        assert_eq!(c.or(Some(0.4), "epsilon", 0.5).unwrap(), 0.4);
        assert_eq!(c.or(None, "t-min", 0.0).unwrap(), -1.0);
        assert_eq!(c.or(None, "delta", 0.1).unwrap(), 0.1);
        assert!(c.check_keys(&["epsilon"]).is_err());
        assert!(Config::parse("novalue").is_err());
    }
}
