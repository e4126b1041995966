//! Flat `key = value` run configuration. Lines starting with `#` and blank
//! lines are ignored; a `#` after a value starts a comment. Later
//! assignments override earlier ones, and command-line flags are applied
//! after the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{config, io_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Pathological1,
    Pathological2,
    Tabular,
    Laplace,
    Burgers,
    Theorem,
    NestedKriging,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Pathological1,
        Experiment::Pathological2,
        Experiment::Tabular,
        Experiment::Laplace,
        Experiment::Burgers,
        Experiment::Theorem,
        Experiment::NestedKriging,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Pathological1 => "pathological1",
            Experiment::Pathological2 => "pathological2",
            Experiment::Tabular => "tabular",
            Experiment::Laplace => "laplace",
            Experiment::Burgers => "burgers",
            Experiment::Theorem => "theorem",
            Experiment::NestedKriging => "nested-kriging",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = crate::error::CliError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// Positive integer.
    Size,
    Seed,
    /// Positive float.
    Positive,
    /// Float in `[0, 1]`.
    Unit,
    Sizes,
    Bool,
    Text,
}

const KEYS: &[(&str, Kind)] = &[
    ("experiment", Kind::Text),
    ("seed", Kind::Seed),
    ("out", Kind::Text),
    ("plots", Kind::Bool),
    ("dump_fields", Kind::Bool),
    ("grid", Kind::Size),
    ("n_train", Kind::Size),
    ("n_test", Kind::Size),
    ("subsample", Kind::Size),
    ("n_colloc", Kind::Size),
    ("gp_lengthscale", Kind::Positive),
    ("nx", Kind::Size),
    ("nt", Kind::Size),
    ("refine", Kind::Size),
    ("reg", Kind::Positive),
    ("lengthscale_factor", Kind::Positive),
    ("trials", Kind::Size),
    ("ns", Kind::Sizes),
    ("models", Kind::Size),
    ("eps", Kind::Positive),
    ("var_y", Kind::Positive),
    ("rho", Kind::Unit),
    ("case_seed", Kind::Seed),
    ("splits", Kind::Size),
    ("data", Kind::Text),
    ("target", Kind::Text),
    ("rows", Kind::Size),
    ("n_interior", Kind::Size),
    ("n_boundary", Kind::Size),
    ("lengthscale", Kind::Positive),
    ("n", Kind::Size),
];

fn kind_of(key: &str) -> Result<Kind> {
    KEYS.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, t)| *t)
        .ok_or_else(|| config(format!("unknown key `{key}`")))
}

fn parse_size(key: &str, v: &str) -> Result<usize> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(config(format!("`{key}` must be a positive integer, got `{v}`"))),
    }
}

fn check(key: &str, kind: Kind, v: &str) -> Result<()> {
    let bad = |what: &str| config(format!("`{key}` must be {what}, got `{v}`"));
    match kind {
        Kind::Size => parse_size(key, v).map(|_| ()),
        Kind::Seed => v.parse::<u64>().map(|_| ()).map_err(|_| bad("a 64-bit unsigned integer")),
        Kind::Positive => match v.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(()),
            _ => Err(bad("a positive number")),
        },
        Kind::Unit => match v.parse::<f64>() {
            Ok(x) if (0.0..=1.0).contains(&x) => Ok(()),
            _ => Err(bad("a number in [0, 1]")),
        },
        Kind::Sizes => {
            if v.split(',').all(|p| parse_size(key, p.trim()).is_ok()) {
                Ok(())
            } else {
                Err(bad("a comma-separated list of positive integers"))
            }
        }
        Kind::Bool => match v {
            "true" | "false" => Ok(()),
            _ => Err(bad("`true` or `false`")),
        },
        Kind::Text => {
            if v.is_empty() {
                Err(bad("non-empty"))
            } else {
                Ok(())
            }
        }
    }
}

/// Validated settings. Getters take the experiment's default and record
/// the value actually used, which is what ends up in the manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    used: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, accepting `-` in place of `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let value = value.trim();
        let kind = kind_of(&key)?;
        check(&key, kind, value)?;
        if key == "experiment" {
            value.parse::<Experiment>()?;
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    /// Applies every assignment in `text`.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v.trim()).map_err(|e| config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        self.merge_str(&text)
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn raw(&mut self, key: &str, default: String) -> String {
        debug_assert!(kind_of(key).is_ok(), "{key}");
        let v = self.values.get(key).cloned().unwrap_or(default);
        self.used.insert(key.to_string(), v.clone());
        v
    }

    pub fn experiment(&mut self) -> Result<Experiment> {
        let v = self.values.get("experiment").cloned().ok_or_else(|| config("no experiment given"))?;
        self.used.insert("experiment".into(), v.clone());
        v.parse()
    }

    pub fn size(&mut self, key: &str, default: usize) -> usize {
        self.raw(key, default.to_string()).parse().expect("validated on set")
    }

    pub fn seed(&mut self, key: &str, default: u64) -> u64 {
        self.raw(key, default.to_string()).parse().expect("validated on set")
    }

    pub fn float(&mut self, key: &str, default: f64) -> f64 {
        self.raw(key, format!("{default:?}")).parse().expect("validated on set")
    }

    pub fn flag(&mut self, key: &str) -> bool {
        self.raw(key, "false".into()) == "true"
    }

    pub fn sizes(&mut self, key: &str, default: &[usize]) -> Vec<usize> {
        let d: Vec<String> = default.iter().map(|n| n.to_string()).collect();
        self.raw(key, d.join(",")).split(',').map(|p| p.trim().parse().expect("validated on set")).collect()
    }

    pub fn text(&mut self, key: &str) -> Option<String> {
        let v = self.values.get(key).cloned()?;
        self.used.insert(key.to_string(), v.clone());
        Some(v)
    }

    pub fn path(&mut self, key: &str, default: &str) -> PathBuf {
        PathBuf::from(self.raw(key, default.to_string()))
    }

    /// `key = value` lines of every setting read so far.
    pub fn resolved(&self) -> String {
        self.used.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_grammar() {
        let mut c = RunConfig::new();
        c.merge_str("# comment\nexperiment = laplace\n\nn_train = 12  # trailing\nns = 50, 100\n").unwrap();
        assert_eq!(c.experiment().unwrap(), Experiment::Laplace);
        assert_eq!(c.size("n_train", 60), 12);
        assert_eq!(c.size("n_test", 20), 20);
        assert_eq!(c.sizes("ns", &[1]), vec![50, 100]);
    }

    #[test]
    fn later_values_override() {
        let mut c = RunConfig::new();
        c.merge_str("grid = 8\n").unwrap();
        c.set("grid", "16").unwrap();
        assert_eq!(c.size("grid", 64), 16);
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = RunConfig::new();
        assert!(c.set("colour", "red").is_err());
        assert!(c.set("grid", "0").is_err());
        assert!(c.set("grid", "-3").is_err());
        assert!(c.set("eps", "nan").is_err());
        assert!(c.set("rho", "1.5").is_err());
        assert!(c.set("experiment", "navier-stokes").is_err());
        assert!(c.merge_str("grid 64\n").is_err());
    }

    #[test]
    fn resolved_round_trips() {
        let mut c = RunConfig::new();
        c.set("experiment", "theorem").unwrap();
        c.set("n-train", "5").unwrap();
        c.experiment().unwrap();
        c.size("n_train", 1);
        c.float("eps", 0.1);
        c.sizes("ns", &[50, 100]);
        let text = c.resolved();
        let mut d = RunConfig::new();
        d.merge_str(&text).unwrap();
        assert_eq!(d.size("n_train", 1), 5);
        assert_eq!(d.float("eps", 9.0), 0.1);
        assert_eq!(d.sizes("ns", &[]), vec![50, 100]);
    }
}
