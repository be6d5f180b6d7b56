//! `key = value` run configuration, overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::UsageError;

pub const KEYS: [&str; 15] = [
    "input",
    "mtr",
    "window",
    "chains",
    "iterations",
    "burn_in",
    "thin",
    "seed",
    "alpha_variance",
    "m",
    "out_dir",
    "per_month",
    "thresholds",
    "posterior",
    "max_lag",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| UsageError(format!("config line {}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(UsageError(format!("config line {}: unknown key `{k}`", i + 1)));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Flag value, else config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, UsageError> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, UsageError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| UsageError(format!("config key `{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.values.get(key).map(PathBuf::from))
    }

    pub fn thresholds(&self, flag: Option<Vec<f64>>, default: &[f64]) -> Result<Vec<f64>, UsageError> {
        if let Some(t) = flag {
            return Ok(t);
        }
        match self.values.get("thresholds") {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| UsageError(format!("config key `thresholds`: cannot parse `{v}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let c = ConfigFile::parse("# run\nwindow = 6\nseed=11  # comment\n\nthresholds = -1, -2\n").unwrap();
        assert_eq!(c.pick::<usize>(None, "window", 3).unwrap(), 6);
        assert_eq!(c.pick(Some(12usize), "window", 3).unwrap(), 12);
        assert_eq!(c.pick::<u64>(None, "seed", 1).unwrap(), 11);
        assert_eq!(c.pick::<usize>(None, "chains", 3).unwrap(), 3);
        assert_eq!(c.thresholds(None, &[0.0]).unwrap(), [-1.0, -2.0]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ConfigFile::parse("colour = red").is_err());
        assert!(ConfigFile::parse("window 3").is_err());
        let c = ConfigFile::parse("window = three").unwrap();
        assert!(c.pick::<usize>(None, "window", 3).is_err());
    }
}
