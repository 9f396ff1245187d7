//! Config resolution: JSON file, then `--key value` overrides, then typed
//! deserialization with unknown keys rejected.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use pinlab::rng::DEFAULT_SEED;
use pinlab::walks::StepLaw;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Keys shared by every run, stripped before the command's own schema applies.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Common {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; absent means the rayon default.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Output file stem; defaults to the command name.
    #[serde(default)]
    pub name: Option<String>,
}

const COMMON_KEYS: [&str; 4] = ["seed", "workers", "out_dir", "name"];
/// Keys that do not influence any emitted number.
const UNHASHED_KEYS: [&str; 3] = ["workers", "out_dir", "name"];

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A named or explicit step law.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawSpec {
    Named(String),
    Explicit(StepLaw),
}

impl Default for LawSpec {
    fn default() -> Self {
        LawSpec::Named("binomial4".into())
    }
}

impl LawSpec {
    pub fn build(&self) -> Result<StepLaw> {
        match self {
            LawSpec::Named(n) => match n.as_str() {
                "binomial4" => Ok(StepLaw::default_law()),
                "simple" => Ok(StepLaw::new("simple", vec![(-1, 0.5), (1, 0.5)])?),
                "lazy_simple" => Ok(StepLaw::new("lazy_simple", vec![(-1, 0.25), (0, 0.5), (1, 0.25)])?),
                other => bail!("unknown step law `{other}` (known: binomial4, simple, lazy_simple)"),
            },
            LawSpec::Explicit(l) => Ok(StepLaw::new(l.name.clone(), l.support.clone())?),
        }
    }
}

/// A fully resolved run configuration.
pub struct Resolved<T> {
    pub common: Common,
    pub params: T,
    /// Echo of every key after defaults were applied.
    pub echo: Value,
    pub hash: String,
}

pub fn read_config_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if !v.is_object() {
        bail!("{}: config must be a JSON object", path.display());
    }
    Ok(v)
}

/// Parses `--key value` / `--key=value` pairs. Keys may use dashes or
/// underscores and dots for nesting; values are JSON when they parse as
/// JSON and plain strings otherwise.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(Vec<String>, Value)>> {
    let mut out = vec![];
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(body) = a.strip_prefix("--") else {
            bail!("expected a --key, found `{a}`");
        };
        let (key, raw) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => (body.to_string(), it.next().ok_or_else(|| anyhow!("--{body} needs a value"))?.clone()),
        };
        let path: Vec<String> = key.split('.').map(|s| s.replace('-', "_")).collect();
        if path.iter().any(|s| s.is_empty()) {
            bail!("malformed key `--{key}`");
        }
        let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
        out.push((path, value));
    }
    Ok(out)
}

fn set_path(root: &mut Map<String, Value>, path: &[String], value: Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty key path");
    let mut cur = root;
    for p in parents {
        let slot = cur.entry(p.clone()).or_insert_with(|| Value::Object(Map::new()));
        if !slot.is_object() {
            *slot = Value::Object(Map::new());
        }
        cur = slot.as_object_mut().expect("object");
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// Merges overrides into `base`, checks the optional `command` key and splits
/// off the common keys before deserializing the command schema.
pub fn resolve<T: DeserializeOwned + Serialize>(command: &str, base: Value, overrides: &[(Vec<String>, Value)]) -> Result<Resolved<T>> {
    let mut root = match base {
        Value::Object(m) => m,
        Value::Null => Map::new(),
        _ => bail!("config must be a JSON object"),
    };
    for (path, v) in overrides {
        set_path(&mut root, path, v.clone())?;
    }
    if let Some(c) = root.remove("command") {
        if c.as_str() != Some(command) {
            bail!("config is for command {c}, not `{command}`");
        }
    }
    let mut common = Map::new();
    for k in COMMON_KEYS {
        if let Some(v) = root.remove(k) {
            common.insert(k.into(), v);
        }
    }
    let common: Common = serde_json::from_value(Value::Object(common)).context("invalid common keys")?;
    let params: T = serde_json::from_value(Value::Object(root)).with_context(|| format!("invalid config for `{command}`"))?;
    let mut echo = match serde_json::to_value(&params)? {
        Value::Object(m) => m,
        _ => unreachable!("command configs are structs"),
    };
    if let Value::Object(c) = serde_json::to_value(&common)? {
        echo.extend(c);
    }
    echo.insert("command".into(), Value::String(command.into()));
    let hashed: Map<String, Value> = echo.iter().filter(|(k, _)| !UNHASHED_KEYS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect();
    let digest = Sha256::digest(serde_json::to_string(&hashed)?.as_bytes());
    let hash = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(Resolved { common, params, echo: Value::Object(echo), hash })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Demo {
        n: usize,
        #[serde(default)]
        inner: Inner,
    }

    #[derive(Debug, Default, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Inner {
        #[serde(default)]
        width: f64,
    }

    fn ov(args: &[&str]) -> Vec<(Vec<String>, Value)> {
        parse_overrides(&args.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn flags_override_file() {
        let base = serde_json::json!({"n": 5, "seed": 3});
        let r: Resolved<Demo> = resolve("demo", base, &ov(&["--n", "7", "--inner.width=0.5", "--out-dir", "x"])).unwrap();
        assert_eq!(r.params.n, 7);
        assert_eq!(r.params.inner.width, 0.5);
        assert_eq!(r.common.seed, 3);
        assert_eq!(r.common.out_dir, PathBuf::from("x"));
    }

    #[test]
    fn schema_errors_name_the_key() {
        let e = resolve::<Demo>("demo", serde_json::json!({}), &[]).err().unwrap();
        assert!(format!("{e:#}").contains("missing field `n`"), "{e:#}");
        let e = resolve::<Demo>("demo", serde_json::json!({"n": 1, "m": 2}), &[]).err().unwrap();
        assert!(format!("{e:#}").contains("unknown field `m`"), "{e:#}");
        let e = resolve::<Demo>("demo", serde_json::json!({"n": 1, "command": "other"}), &[]).err().unwrap();
        assert!(format!("{e:#}").contains("not `demo`"));
    }

    #[test]
    fn hash_ignores_workers_and_paths() {
        let a: Resolved<Demo> = resolve("demo", serde_json::json!({"n": 1}), &ov(&["--workers", "1"])).unwrap();
        let b: Resolved<Demo> = resolve("demo", serde_json::json!({"n": 1, "out_dir": "elsewhere"}), &ov(&["--workers", "4"])).unwrap();
        let c: Resolved<Demo> = resolve("demo", serde_json::json!({"n": 1, "seed": 2}), &[]).unwrap();
        assert_eq!(a.hash, b.hash);
        assert_ne!(a.hash, c.hash);
        assert_eq!(a.hash.len(), 64);
    }
}
