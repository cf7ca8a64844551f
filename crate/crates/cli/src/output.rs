//! CSV and JSON emission. Files are staged next to their target and only
//! renamed into place once the whole run has succeeded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA_VERSION: u32 = 1;

/// A real with 17 significant digits, the shortest width that round-trips.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(config: &RunConfig, columns: &[&str]) -> Self {
        let mut text = String::new();
        writeln!(text, "# powerurn {TOOL_VERSION}").unwrap();
        writeln!(text, "# config_hash {}", config.hash()).unwrap();
        writeln!(text, "# experiment {}", config.experiment).unwrap();
        writeln!(text, "{}", columns.join(",")).unwrap();
        Csv { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Outcome of an experiment before the run metadata is attached.
pub struct Outcome {
    pub csv: Csv,
    pub statistic: Option<f64>,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
    pub protocol: String,
    pub details: Value,
}

#[derive(Serialize)]
pub struct Summary<'a> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub experiment: &'a str,
    pub config: &'a RunConfig,
    pub config_hash: String,
    pub wall_time_seconds: f64,
    pub statistic: Option<f64>,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
    pub protocol: &'a str,
    pub details: &'a Value,
}

pub fn default_paths(config: &RunConfig) -> (PathBuf, PathBuf) {
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", config.experiment)));
    let summary = config.summary.clone().unwrap_or_else(|| out.with_extension("summary.json"));
    (out, summary)
}

fn staging_path(target: &Path) -> PathBuf {
    let name = target.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    target.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}

/// Writes every `(path, contents)` pair or none of them.
pub fn commit(files: &[(PathBuf, String)]) -> Result<()> {
    let mut staged = Vec::new();
    for (path, body) in files {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let tmp = staging_path(path);
        if let Err(e) = fs::write(&tmp, body) {
            for t in staged {
                let _ = fs::remove_file(t);
            }
            return Err(e).with_context(|| format!("writing {}", tmp.display()));
        }
        staged.push(tmp);
    }
    for ((path, _), tmp) in files.iter().zip(&staged) {
        fs::rename(tmp, path).with_context(|| format!("moving output into {}", path.display()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_at_seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e17] {
            let s = real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(s.split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
        }
    }
}
