//! Run configuration: command-line flags layered over an optional
//! `key = value` file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::UsageError;

/// Keys accepted in a `--config` file. They are the long flag names.
pub const KEYS: &[&str] = &[
    "field", "x0", "T", "stop", "tol", "lambda", "steps", "t", "beta", "r0", "levels", "ratio", "dirs", "tail",
    "samples", "seed", "out", "phi", "k", "level", "band", "factor", "mode", "pairs", "nmax", "gens", "input",
];

#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    pub out: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    /// Reads the config file (if any) and resolves the common options.
    pub fn load(path: Option<&Path>, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self, UsageError> {
        let values = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| UsageError(format!("cannot read config {}: {e}", p.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        let mut cfg = RunConfig {
            values,
            out: PathBuf::new(),
            seed: 0,
        };
        cfg.out = cfg.get(out, "out")?.unwrap_or_else(|| PathBuf::from("out"));
        cfg.seed = cfg.get(seed, "seed")?.unwrap_or(0);
        Ok(cfg)
    }

    /// The flag if given, else the config value, else `None`.
    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, UsageError>
    where
        T::Err: Display,
    {
        debug_assert!(KEYS.contains(&key), "undeclared key {key}");
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| UsageError(format!("config key {key}: cannot parse {s:?}: {e}"))),
        }
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, UsageError>
    where
        T::Err: Display,
    {
        self.get(flag, key)?
            .ok_or_else(|| UsageError(format!("missing --{key} (flag or config key)")))
    }

    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, UsageError>
    where
        T::Err: Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    /// Like [`RunConfig::or`], then checks `lo ≤ value ≤ hi`.
    pub fn ranged<T>(&self, flag: Option<T>, key: &str, default: T, lo: T, hi: T) -> Result<T, UsageError>
    where
        T: FromStr + PartialOrd + Display + Copy,
        T::Err: Display,
    {
        let v = self.or(flag, key, default)?;
        check_range(key, v, lo, hi)
    }
}

pub fn check_range<T: PartialOrd + Display>(key: &str, v: T, lo: T, hi: T) -> Result<T, UsageError> {
    if v >= lo && v <= hi {
        Ok(v)
    } else {
        Err(UsageError(format!("--{key} {v} outside [{lo}, {hi}]")))
    }
}

/// `key = value` lines; `#` starts a comment. Unknown or repeated keys are
/// errors.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(UsageError(format!("config line {}: unknown key {k:?}", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(UsageError(format!("config line {}: repeated key {k:?}", i + 1)));
        }
    }
    Ok(out)
}

/// A point given as `a,b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair(pub f64, pub f64);

impl FromStr for Pair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [a, b] => {
                let a: f64 = a.parse().map_err(|_| format!("bad number {a:?}"))?;
                let b: f64 = b.parse().map_err(|_| format!("bad number {b:?}"))?;
                if a.is_finite() && b.is_finite() {
                    Ok(Pair(a, b))
                } else {
                    Err("values must be finite".into())
                }
            }
            _ => Err(format!("expected a,b but got {s:?}")),
        }
    }
}

impl Display for Pair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.0, self.1)
    }
}
