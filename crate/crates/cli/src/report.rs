//! Suite reports and their on-disk form.
//!
//! `report.json` holds only deterministic fields. Wall-clock measurements
//! (`wall_ms` and every nested `runtime_ms`) go to `timing.json` so repeated
//! runs produce byte-identical reports.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::RunConfig;
use crate::error::LabError;

/// A side file written next to `report.json`.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    pub fn new(name: &str, contents: Vec<u8>) -> Self {
        Self { name: name.to_string(), contents }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub seed: u64,
    pub config_digest: String,
    pub family: String,
    pub details: Value,
    pub artifacts: Vec<String>,
    #[serde(skip)]
    pub wall_ms: u64,
    /// Nested `runtime_ms` values keyed by JSON path.
    #[serde(skip)]
    pub runtimes: Map<String, Value>,
    #[serde(skip)]
    pub files: Vec<Artifact>,
}

impl SuiteReport {
    pub fn new(
        suite: &str,
        passed: bool,
        cfg: &RunConfig,
        family: String,
        mut details: Value,
        wall_ms: u64,
        files: Vec<Artifact>,
    ) -> Self {
        let mut runtimes = Map::new();
        strip_runtimes(&mut details, "details", &mut runtimes);
        Self {
            suite: suite.to_string(),
            passed,
            seed: cfg.seed,
            config_digest: cfg.digest(),
            family,
            details,
            artifacts: files.iter().map(|f| f.name.clone()).collect(),
            wall_ms,
            runtimes,
            files,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn timing_json(&self) -> String {
        let v = serde_json::json!({ "suite": self.suite, "wall_ms": self.wall_ms, "runtime_ms": self.runtimes });
        let mut s = serde_json::to_string_pretty(&v).expect("timing serializes");
        s.push('\n');
        s
    }
}

fn strip_runtimes(v: &mut Value, path: &str, out: &mut Map<String, Value>) {
    match v {
        Value::Object(map) => {
            if let Some(ms) = map.shift_remove("runtime_ms") {
                out.insert(path.to_string(), ms);
            }
            for (k, child) in map.iter_mut() {
                strip_runtimes(child, &format!("{path}.{k}"), out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter_mut().enumerate() {
                strip_runtimes(child, &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

fn write(path: &Path, contents: &[u8]) -> Result<(), LabError> {
    fs::write(path, contents).map_err(|e| LabError::io(path, e))
}

/// Writes `report.json`, `timing.json` and the side files into `dir`.
pub fn emit_report(report: &SuiteReport, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut written = Vec::new();
    let main = dir.join("report.json");
    write(&main, report.to_json().as_bytes())?;
    written.push(main);
    let timing = dir.join("timing.json");
    write(&timing, report.timing_json().as_bytes())?;
    written.push(timing);
    for f in &report.files {
        let p = dir.join(&f.name);
        write(&p, &f.contents)?;
        written.push(p);
    }
    Ok(written)
}

/// Summary row read back from a `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportSummary {
    pub path: PathBuf,
    pub suite: String,
    pub passed: bool,
    pub family: String,
}

/// Reads `dir/report.json` and `dir/*/report.json`, sorted by path.
pub fn collect_reports(dir: &Path) -> Result<Vec<ReportSummary>, LabError> {
    let mut paths = Vec::new();
    let direct = dir.join("report.json");
    if direct.is_file() {
        paths.push(direct);
    }
    for entry in fs::read_dir(dir).map_err(|e| LabError::io(dir, e))? {
        let entry = entry.map_err(|e| LabError::io(dir, e))?;
        let candidate = entry.path().join("report.json");
        if candidate.is_file() {
            paths.push(candidate);
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(|e| LabError::io(&p, e))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| LabError::Config(format!("{}: not a suite report: {e}", p.display())))?;
            let field = |k: &str| v.get(k).cloned().unwrap_or(Value::Null);
            Ok(ReportSummary {
                suite: field("suite").as_str().unwrap_or("?").to_string(),
                passed: field("passed").as_bool().unwrap_or(false),
                family: field("family").as_str().unwrap_or("?").to_string(),
                path: p,
            })
        })
        .collect()
}
