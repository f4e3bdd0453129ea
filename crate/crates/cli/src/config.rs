//! Flat `key = value` scenario files. `#` starts a comment; later
//! assignments (and `--set` flags) replace earlier ones.

use std::collections::BTreeMap;
use std::path::Path;

use ccsim_core::Rational;
use num_traits::Zero;

use crate::error::{config_err, CliError, Result};

pub const KEYS: &[&str] = &[
    "scheme",
    "N",
    "K",
    "M",
    "M_grid",
    "F",
    "d",
    "rho",
    "t0",
    "t",
    "levels_N",
    "levels_K",
    "levels_U",
    "partitions",
    "variant",
    "seed",
    "trials",
    "demand_policy",
    "demands",
    "simulate",
    "exec",
];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return config_err(format!("line {}: expected key=value, got {line:?}", no + 1));
            };
            cfg.set(k.trim(), v.trim())
                .map_err(|e| CliError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// `M` and `M_grid` are two spellings of the grid; setting one drops
    /// the other so overrides always win.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return config_err(format!("unknown key {key:?}"));
        }
        match key {
            "M" => {
                self.values.remove("M_grid");
            }
            "M_grid" => {
                self.values.remove("M");
            }
            _ => {}
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `KEY=VALUE` override.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        match assignment.split_once('=') {
            Some((k, v)) => self.set(k.trim(), v.trim()),
            None => Err(CliError::Usage(format!(
                "expected KEY=VALUE, got {assignment:?}"
            ))),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.parsed(key, |s| s.parse::<usize>().ok())
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.parsed(key, |s| s.parse::<u64>().ok())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.parsed(key, |s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    pub fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.parsed(key, |s| list(s).map(|p| p.parse().ok()).collect())
    }

    /// The memory grid from `M` or `M_grid`.
    pub fn grid(&self) -> Result<Option<Vec<Rational>>> {
        let key = if self.values.contains_key("M") {
            "M"
        } else {
            "M_grid"
        };
        match self.get(key) {
            None => Ok(None),
            Some(s) => list(s)
                .map(parse_rational)
                .collect::<Result<Vec<_>>>()
                .map(Some)
                .map_err(|e| CliError::Config(format!("{key}: {e}"))),
        }
    }

    fn parsed<T>(&self, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => f(s)
                .map(Some)
                .ok_or_else(|| CliError::Config(format!("{key}: cannot parse {s:?}"))),
        }
    }
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

/// Exact rational from `7`, `3/2` or `0.25`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || CliError::Config(format!("not a rational: {s:?}"));
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i128 = p.trim().parse().map_err(|_| bad())?;
        let q: i128 = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        || frac.len() > 18
    {
        return Err(bad());
    }
    let digits: i128 = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let v = Rational::new(digits, 10i128.pow(frac.len() as u32));
    Ok(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ccsim_core::rational;

    #[test]
    fn parse_and_override() {
        let mut c =
            Config::parse("scheme = man  # centralized\n\nN=4\nK = 4\nM_grid=0,1,2\n").unwrap();
        assert_eq!(c.get("scheme"), Some("man"));
        assert_eq!(c.usize("N").unwrap(), Some(4));
        c.apply("M=1/2").unwrap();
        assert_eq!(c.grid().unwrap(), Some(vec![rational(1, 2)]));
        assert!(c.get("M_grid").is_none());
    }

    #[test]
    fn rejects_junk() {
        assert!(Config::parse("N 4").is_err());
        assert!(Config::parse("Q=1").is_err());
        let c = Config::parse("K=four").unwrap();
        assert!(c.usize("K").is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/2").unwrap(), rational(3, 2));
        assert_eq!(parse_rational("0.25").unwrap(), rational(1, 4));
        assert_eq!(parse_rational("7").unwrap(), rational(7, 1));
        assert_eq!(parse_rational("-.5").unwrap(), rational(-1, 2));
        for bad in ["", ".", "1/0", "a", "1.2.3", "1e3"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }
}
