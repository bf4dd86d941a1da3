//! Row rendering and the JSON metadata sidecar.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown output format {other:?}"))),
        }
    }
}

/// Contents of `<stem>.meta.json`. No timestamps, so reruns are identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub fingerprint: String,
    pub seed: u64,
    pub rows: usize,
    pub summary: serde_json::Value,
    pub scenario: Scenario,
}

impl RunMeta {
    pub fn new(command: &str, scenario: &Scenario, rows: usize, summary: serde_json::Value) -> Self {
        Self {
            tool: "gigalink",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            fingerprint: scenario.fingerprint(),
            seed: scenario.seed,
            rows,
            summary,
            scenario: scenario.clone(),
        }
    }
}

pub fn render_rows<T: Serialize>(rows: &[T], format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Error::Io(e.to_string()))
        }
        OutputFormat::Json => {
            let mut v = serde_json::to_vec_pretty(rows).map_err(|e| Error::Io(e.to_string()))?;
            v.push(b'\n');
            Ok(v)
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Write the rows to `path` and the metadata next to it.
pub fn write_output<T: Serialize>(path: &Path, rows: &[T], format: OutputFormat, meta: &RunMeta) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, render_rows(rows, format)?)?;
    let mut m = serde_json::to_vec_pretty(meta).map_err(|e| Error::Io(e.to_string()))?;
    m.push(b'\n');
    std::fs::write(sidecar_path(path), m)?;
    Ok(())
}
