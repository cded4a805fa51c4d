//! JSON report envelope shared by every command.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub result: Value,
}

impl Report {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            tool: "cvsheet",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            passed: true,
            checks: vec![],
            result: Value::Null,
        }
    }

    /// Record a check; `value <= threshold` passes unless `passed` is given.
    pub fn below(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(name, value <= threshold, value, threshold, None);
    }

    /// `value > threshold` passes.
    pub fn above(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(name, value > threshold, value, threshold, None);
    }

    pub fn push(&mut self, name: &str, passed: bool, value: f64, threshold: f64, detail: Option<String>) {
        self.checks.push(Check { name: name.into(), passed, value, threshold, detail });
    }

    /// A check that could not be evaluated.
    pub fn failed(&mut self, name: &str, why: impl std::fmt::Display) {
        self.push(name, false, f64::NAN, f64::NAN, Some(why.to_string()));
    }

    pub fn set_result(&mut self, v: impl Serialize) -> Result<()> {
        self.result = serde_json::to_value(v)?;
        Ok(())
    }

    /// Print one line per check and write `<out>/<command>.json`. Returns overall pass.
    pub fn finish(mut self, out: &Path) -> Result<bool> {
        self.passed = self.checks.iter().all(|c| c.passed);
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            match &c.detail {
                Some(d) => println!("{tag} {}: {:.6e} (threshold {:.3e}) {d}", c.name, c.value, c.threshold),
                None => println!("{tag} {}: {:.6e} (threshold {:.3e})", c.name, c.value, c.threshold),
            }
        }
        let path = out.join(format!("{}.json", self.command));
        fs::write(&path, serde_json::to_string_pretty(&self)?).with_context(|| format!("writing {}", path.display()))?;
        println!("{} {} -> {}", if self.passed { "PASS" } else { "FAIL" }, self.command, path.display());
        Ok(self.passed)
    }
}

pub fn out_file(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

pub fn create(out: &Path, name: &str) -> Result<fs::File> {
    let p = out_file(out, name);
    fs::File::create(&p).with_context(|| format!("creating {}", p.display()))
}
