//! Flat `key = value` run configuration with per-command typed schemas.

use std::collections::BTreeMap;
use std::fmt;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Str,
    Int,
    Real,
    Bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Str(String),
    Int(u64),
    Real(f64),
    Bool(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => f.write_str(s),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r:?}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// A configuration key: name, type and default (`None` means required).
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, kind, default, help }
}

use Kind::*;

const COMMON: &[Key] = &[
    key("seed", Int, Some("1"), "master seed"),
    key("threads", Int, Some("0"), "worker threads (0 = all cores); never changes results"),
];

const GEODESIC: &[Key] = &[
    key("x1", Str, None, "first tree (Newick)"),
    key("x2", Str, None, "second tree (Newick)"),
    key("taxa_path", Str, Some(""), "taxon map, one label per line"),
    key("points", Int, Some("0"), "equally spaced points to print along the geodesic"),
];

const FRECHET: &[Key] = &[
    key("data_path", Str, None, "trees, one Newick per line"),
    key("taxa_path", Str, Some(""), "taxon map"),
    key("iters", Int, Some("200"), "Sturm iterations"),
];

const WALK: &[Key] = &[
    key("x0", Str, None, "source tree (Newick)"),
    key("t0", Real, None, "dispersion"),
    key("m", Int, Some("50"), "walk steps"),
    key("walks", Int, Some("1000"), "number of walks"),
    key("record_steps", Bool, Some("true"), "write every intermediate step to the CSV"),
    key("taxa_path", Str, Some(""), "taxon map"),
];

const BRIDGE: &[Key] = &[
    key("x0", Str, None, "source tree (Newick)"),
    key("x_star", Str, None, "end tree (Newick)"),
    key("t0", Real, None, "dispersion"),
    key("m", Int, Some("50"), "walk steps"),
    key("iters", Int, Some("10000"), "total iterations, burn-in included"),
    key("burnin", Int, Some("1000"), "burn-in iterations"),
    key("thin", Int, Some("10"), "thinning interval for bridge dumps"),
    key("alpha_b", Real, Some("0.2"), "segment length parameter"),
    key("penalty", Str, Some("codim-sum"), "proposal horizon penalty: codim-sum or zero"),
    key("taxa_path", Str, Some(""), "taxon map"),
];

const INFER: &[Key] = &[
    key("data_path", Str, None, "trees, one Newick per line"),
    key("taxa_path", Str, Some(""), "taxon map"),
    key("m", Int, Some("50"), "walk steps"),
    key("iters", Int, Some("10000"), "total sweeps, burn-in included"),
    key("burnin", Int, Some("1000"), "burn-in sweeps"),
    key("thin", Int, Some("10"), "thinning interval"),
    key("alpha_b", Real, Some("0.2"), "bridge segment parameter"),
    key("alpha_0", Real, Some("0.9"), "source-move segment parameter"),
    key("lambda0", Real, Some("0.002"), "source proposal scale"),
    key("sigma0", Real, Some("0.1"), "log-normal dispersion proposal scale"),
    key("frechet_iters", Int, Some("200"), "Sturm iterations for initialization"),
];

const MARGINAL: &[Key] = &[
    key("data_path", Str, None, "trees, one Newick per line"),
    key("taxa_path", Str, Some(""), "taxon map"),
    key("x0", Str, None, "source tree (Newick)"),
    key("t0", Real, None, "dispersion"),
    key("m", Int, Some("50"), "walk steps"),
    key("method", Str, Some("chib"), "chib, tunnel, stepping-stone or star-exact"),
    key("m1", Int, Some("1000"), "conditional bridge samples"),
    key("m2", Int, Some("1000"), "independence proposals"),
    key("h", Int, Some("10"), "Chib evaluation bridges"),
    key("k", Int, Some("100"), "tunnel iterations / stepping-stone rungs"),
    key("burnin", Int, Some("1000"), "burn-in"),
    key("thin", Int, Some("10"), "thinning"),
    key("ss_samples", Int, Some("100"), "samples per stepping-stone rung"),
    key("bootstrap", Int, Some("200"), "bootstrap resamples"),
    key("alpha_b", Real, Some("0.2"), "bridge segment parameter"),
    key("repeats", Int, Some("1"), "independent repeats; the median is reported"),
];

const EXACT4: &[Key] = &[
    key("x0", Str, None, "four-taxon source tree (Newick)"),
    key("t0", Real, None, "dispersion"),
    key("radius", Real, Some("3.0"), "largest branch length on each axis"),
    key("points", Int, Some("301"), "grid points per axis"),
    key("data_path", Str, Some(""), "optional four-taxon trees to evaluate"),
    key("taxa_path", Str, Some(""), "taxon map"),
];

const SUMMARIZE: &[Key] = &[
    key("data_path", Str, None, "trees, one Newick per line"),
    key("taxa_path", Str, Some(""), "taxon map"),
];

/// The command names, in help order.
pub const COMMANDS: &[&str] = &[
    "geodesic",
    "frechet",
    "simulate-walk",
    "sample-bridge",
    "infer",
    "marginal",
    "exact4",
    "summarize",
];

pub fn schema(command: &str) -> Option<&'static [Key]> {
    Some(match command {
        "geodesic" => GEODESIC,
        "frechet" => FRECHET,
        "simulate-walk" => WALK,
        "sample-bridge" => BRIDGE,
        "infer" => INFER,
        "marginal" => MARGINAL,
        "exact4" => EXACT4,
        "summarize" => SUMMARIZE,
        _ => return None,
    })
}

fn find(command: &str, name: &str) -> Option<&'static Key> {
    COMMON
        .iter()
        .chain(schema(command).unwrap_or(&[]))
        .find(|k| k.name == name)
}

fn parse_value(k: &Key, raw: &str) -> Result<Value, CliError> {
    let bad = || CliError::Config(format!("key `{}`: `{raw}` is not a valid {:?}", k.name, k.kind));
    Ok(match k.kind {
        Str => Value::Str(raw.to_string()),
        Int => Value::Int(raw.parse().map_err(|_| bad())?),
        Real => {
            let v: f64 = raw.parse().map_err(|_| bad())?;
            if !v.is_finite() {
                return Err(bad());
            }
            Value::Real(v)
        }
        Bool => Value::Bool(raw.parse().map_err(|_| bad())?),
    })
}

/// Resolved configuration for one command: every schema key has a value.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: String,
    values: BTreeMap<String, Value>,
}

impl RunConfig {
    /// Layers `file_text` then `overrides` over the defaults. Unknown keys and
    /// missing required keys are errors.
    pub fn resolve(
        command: &str,
        file_text: Option<&str>,
        overrides: &[(String, String)],
    ) -> Result<Self, CliError> {
        let keys = schema(command).ok_or_else(|| CliError::Config(format!("unknown command `{command}`")))?;
        let mut raw: BTreeMap<String, String> = BTreeMap::new();
        if let Some(text) = file_text {
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
                raw.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        for (k, v) in overrides {
            raw.insert(k.clone(), v.clone());
        }
        let mut values = BTreeMap::new();
        for (k, v) in &raw {
            let key = find(command, k)
                .ok_or_else(|| CliError::Config(format!("unknown key `{k}` for `{command}`")))?;
            values.insert(k.clone(), parse_value(key, v)?);
        }
        for key in COMMON.iter().chain(keys) {
            if values.contains_key(key.name) {
                continue;
            }
            match key.default {
                Some(d) => {
                    values.insert(key.name.to_string(), parse_value(key, d)?);
                }
                None => return Err(CliError::Config(format!("missing required key `{}`", key.name))),
            }
        }
        Ok(RunConfig {
            command: command.to_string(),
            values,
        })
    }

    /// Snapshot text; `resolve(command, Some(&snapshot), &[])` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = format!("# treebridge {}\n", self.command);
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    fn get(&self, name: &str) -> &Value {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("key `{name}` not in schema for `{}`", self.command))
    }

    pub fn str(&self, name: &str) -> &str {
        match self.get(name) {
            Value::Str(s) => s,
            v => panic!("key `{name}` is {v:?}"),
        }
    }

    /// A string key whose empty value means absent.
    pub fn opt_str(&self, name: &str) -> Option<&str> {
        Some(self.str(name)).filter(|s| !s.is_empty())
    }

    pub fn int(&self, name: &str) -> usize {
        match self.get(name) {
            Value::Int(i) => *i as usize,
            v => panic!("key `{name}` is {v:?}"),
        }
    }

    pub fn u64(&self, name: &str) -> u64 {
        match self.get(name) {
            Value::Int(i) => *i,
            v => panic!("key `{name}` is {v:?}"),
        }
    }

    pub fn real(&self, name: &str) -> f64 {
        match self.get(name) {
            Value::Real(r) => *r,
            v => panic!("key `{name}` is {v:?}"),
        }
    }

    pub fn bool(&self, name: &str) -> bool {
        match self.get(name) {
            Value::Bool(b) => *b,
            v => panic!("key `{name}` is {v:?}"),
        }
    }
}

/// Help text listing every command's keys.
pub fn keys_help() -> String {
    let mut s = String::from("CONFIGURATION KEYS (key=value arguments or a --config file):\n  all commands:\n");
    let line = |s: &mut String, k: &Key| {
        let d = match k.default {
            Some("") => "unset".to_string(),
            Some(d) => d.to_string(),
            None => "required".to_string(),
        };
        s.push_str(&format!("    {:<14} {} [{}]\n", k.name, k.help, d));
    };
    for k in COMMON {
        line(&mut s, k);
    }
    for c in COMMANDS {
        s.push_str(&format!("  {c}:\n"));
        for k in schema(c).unwrap() {
            line(&mut s, k);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn defaults_overrides_and_snapshot() {
        let file = "# comment\nm = 20\nalpha_b=0.05\n";
        let c = RunConfig::resolve("infer", Some(file), &ov(&[("data_path", "d.nwk"), ("m", "30")])).unwrap();
        assert_eq!(c.int("m"), 30);
        assert_eq!(c.real("alpha_b"), 0.05);
        assert_eq!(c.real("lambda0"), 0.002);
        assert_eq!(c.opt_str("taxa_path"), None);
        let again = RunConfig::resolve("infer", Some(&c.to_text()), &[]).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_input() {
        let e = |cmd: &str, file: Option<&str>, o: &[(&str, &str)]| RunConfig::resolve(cmd, file, &ov(o)).unwrap_err();
        assert!(matches!(e("summarize", None, &[("data_path", "x"), ("bogus", "1")]), CliError::Config(_)));
        assert!(matches!(e("summarize", None, &[]), CliError::Config(_)));
        assert!(matches!(e("infer", None, &[("data_path", "x"), ("m", "two")]), CliError::Config(_)));
        assert!(matches!(e("infer", None, &[("data_path", "x"), ("sigma0", "nan")]), CliError::Config(_)));
        assert!(matches!(e("summarize", Some("no equals sign"), &[]), CliError::Config(_)));
        assert!(matches!(e("nope", None, &[]), CliError::Config(_)));
    }

    #[test]
    fn every_schema_default_parses() {
        for c in COMMANDS {
            for k in schema(c).unwrap() {
                if let Some(d) = k.default {
                    parse_value(k, d).unwrap();
                }
            }
        }
    }
}
