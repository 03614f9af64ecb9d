//! Writers for CSV and JSON outputs. Every command also writes
//! `<command>.json`, which carries the configuration text verbatim.

use std::fs;
use std::path::{Path, PathBuf};

use grushin_core::{Error, Result};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub struct Output {
    dir: PathBuf,
    raw_config: String,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path, raw_config: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Output { dir: dir.to_path_buf(), raw_config: raw_config.to_string(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name)).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes a grid field in the `s-grid` / `t-grid` CSV layout.
    pub fn grid(&mut self, name: &str, gf: &grushin_core::GridField) -> Result<()> {
        let f = fs::File::create(self.dir.join(name))?;
        gf.write_csv(std::io::BufWriter::new(f))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.dir.join(name), value)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `<command>.json` with the verdict, the summary and the echoed
    /// configuration.
    pub fn finish(mut self, command: &str, pass: bool, summary: Value) -> Result<()> {
        self.files.sort();
        let doc = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "pass": pass,
            "config": self.raw_config,
            "files": self.files,
            "summary": summary,
        });
        write_json(&self.dir.join(format!("{command}.json")), &doc)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Input(format!("csv: {other:?}")),
    }
}
