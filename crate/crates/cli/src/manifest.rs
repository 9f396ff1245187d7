//! Run manifests and the `report` aggregation.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    /// Pass iff `value < threshold`, except for flags (value 1 = true).
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Assertion {
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value < threshold, detail: String::new() }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, pass: ok, detail: String::new() }
    }

    /// Strictly decreasing sequence; value is the largest consecutive ratio.
    pub fn decreasing(name: &str, xs: &[f64]) -> Self {
        let worst = xs.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        let pass = xs.windows(2).all(|w| w[1] < w[0]);
        Self { name: name.into(), value: worst, threshold: 1.0, pass, detail: join(xs) }
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub name: String,
    pub version: String,
    pub config_hash: String,
    pub config: Value,
    pub seed: u64,
    pub workers: Option<usize>,
    pub assertions: Vec<Assertion>,
    pub pass: bool,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}{MANIFEST_SUFFIX}", self.name));
        let mut f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(path)
    }
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for e in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let p = e?.path();
        if p.is_dir() {
            collect(&p, out)?;
        } else if p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(MANIFEST_SUFFIX)) {
            out.push(p);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub run: String,
    pub command: String,
    pub config_hash: String,
    pub assertions: usize,
    pub failed: Vec<String>,
    pub pass: bool,
}

/// Every manifest under `dir`, sorted by path.
pub fn aggregate(dir: &Path) -> Result<Vec<ReportRow>> {
    let mut paths = vec![];
    collect(dir, &mut paths)?;
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let m: Manifest = serde_json::from_reader(std::fs::File::open(p)?).with_context(|| format!("parsing {}", p.display()))?;
            let rel = p.strip_prefix(dir).unwrap_or(p).to_string_lossy();
            Ok(ReportRow {
                run: rel.trim_end_matches(MANIFEST_SUFFIX).to_string(),
                command: m.command,
                config_hash: m.config_hash[..12.min(m.config_hash.len())].to_string(),
                assertions: m.assertions.len(),
                failed: m.assertions.iter().filter(|a| !a.pass).map(|a| a.name.clone()).collect(),
                pass: m.pass && m.assertions.iter().all(|a| a.pass),
            })
        })
        .collect()
}

pub fn write_report_csv<W: Write>(mut w: W, rows: &[ReportRow]) -> std::io::Result<()> {
    writeln!(w, "run,command,config_hash,assertions,failed,pass")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.run, r.command, r.config_hash, r.assertions, r.failed.join(";"), if r.pass { "PASS" } else { "FAIL" })?;
    }
    Ok(())
}
