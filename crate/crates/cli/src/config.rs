//! Run configuration: a flat `key = value` file with `[section]` headers.
//! Keys outside any section belong to `[general]`. A value given on the
//! command line beats the file, and the file beats the built-in default.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

/// Keys each section accepts; anything else is rejected so typos surface.
pub const SCHEMA: &[(&str, &[&str])] = &[
    ("general", &["format", "output"]),
    ("indicial", &["N", "beta", "compare-casimir"]),
    ("verify-models", &["N", "beta", "lambda", "sweep"]),
    ("verify-reductions", &["k", "theta", "seed", "seeds", "N", "points", "backend"]),
    (
        "solve-nahm",
        &["N", "beta", "y0", "y1", "steps", "method", "tol", "blow-up", "exact-pole", "perturb", "trajectory"],
    ),
    ("residual", &["system", "theta", "beta", "backend", "tol", "check-form-equivalence", "snapshot"]),
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let ini = ini::Ini::load_from_str_noescape(text).map_err(|e| e.to_string())?;
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let name = name.unwrap_or("general");
            let Some((_, keys)) = SCHEMA.iter().find(|(s, _)| *s == name) else {
                return Err(format!("unknown section [{name}]"));
            };
            let entry = sections.entry(name.to_string()).or_default();
            for (k, v) in props.iter() {
                if !keys.contains(&k) {
                    return Err(format!("unknown key '{k}' in [{name}]"));
                }
                entry.insert(k.to_string(), v.trim().to_string());
            }
        }
        Ok(Self { sections })
    }

    pub fn scope<'a>(&'a self, section: &'a str) -> Scope<'a> {
        Scope { cfg: self, section }
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }
}

/// Lookup within one section, applying flag > file > default.
pub struct Scope<'a> {
    cfg: &'a Config,
    section: &'a str,
}

impl Scope<'_> {
    fn raw<'b>(&'b self, flag: &'b Option<String>, key: &str) -> Option<&'b str> {
        flag.as_deref().or_else(|| self.cfg.get(self.section, key))
    }

    pub fn value<T: FromStr>(&self, flag: &Option<String>, key: &str, default: T) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(flag, key) {
            Some(s) => parse_one(s, key),
            None => Ok(default),
        }
    }

    pub fn optional<T: FromStr>(&self, flag: &Option<String>, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(flag, key).map(|s| parse_one(s, key)).transpose()
    }

    pub fn list<T: FromStr>(&self, flag: &Option<String>, key: &str, default: Vec<T>) -> Result<Vec<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(flag, key) {
            Some(s) => parse_list(s, key),
            None => Ok(default),
        }
    }

    /// Boolean switches: a set flag wins; otherwise the file value, if any.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, String> {
        if flag {
            return Ok(true);
        }
        match self.cfg.get(self.section, key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(format!("{key}: expected true or false, got '{v}'")),
        }
    }
}

fn parse_one<T: FromStr>(s: &str, key: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e| format!("{key}: cannot parse '{}': {e}", s.trim()))
}

/// Comma-separated values; empty items are an error.
pub fn parse_list<T: FromStr>(s: &str, key: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<&str> = s.split(',').map(str::trim).collect();
    if items.iter().any(|x| x.is_empty()) {
        return Err(format!("{key}: empty item in list '{s}'"));
    }
    items.into_iter().map(|x| parse_one(x, key)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flag_then_file_then_default() {
        let cfg = Config::parse("format = csv\n[indicial]\nN = 3\nbeta = 0.1, 0.2\n").unwrap();
        let s = cfg.scope("indicial");
        assert_eq!(s.value::<usize>(&Some("4".into()), "N", 2).unwrap(), 4);
        assert_eq!(s.value::<usize>(&None, "N", 2).unwrap(), 3);
        assert_eq!(s.list::<f64>(&None, "beta", vec![0.0]).unwrap(), vec![0.1, 0.2]);
        assert!(!s.switch(false, "compare-casimir").unwrap());
        assert_eq!(cfg.scope("general").value::<String>(&None, "format", "json".into()).unwrap(), "csv");
        assert_eq!(Config::default().scope("indicial").value::<usize>(&None, "N", 2).unwrap(), 2);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Config::parse("[indicial]\nbeat = 1\n").unwrap_err().contains("beat"));
        assert!(Config::parse("[nope]\nx = 1\n").is_err());
        let cfg = Config::parse("[indicial]\nN = two\ncompare-casimir = maybe\n").unwrap();
        assert!(cfg.scope("indicial").value::<usize>(&None, "N", 2).is_err());
        assert!(cfg.scope("indicial").switch(false, "compare-casimir").is_err());
        assert!(parse_list::<f64>("1,,2", "beta").is_err());
    }
}
