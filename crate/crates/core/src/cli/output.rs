//! Run directories, manifests and CSV emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOG_FILE: &str = "run.log";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub parameters: serde_json::Value,
    pub created: String,
    pub finished: Option<String>,
    pub outputs: Vec<String>,
}

/// One cell of a CSV row.
#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
    B(bool),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}
impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        match v {
            Some(x) => Cell::F(x),
            None => Cell::S(String::new()),
        }
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.clone(),
        }
    }
}

pub struct Table {
    columns: Vec<&'static str>,
    body: String,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            body: String::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        let _ = writeln!(self.body, "{}", line.join(","));
    }

    /// Header row plus data rows, without the provenance comment.
    pub fn body(&self) -> String {
        format!("{}\n{}", self.columns.join(","), self.body)
    }
}

/// Output directory of one subcommand invocation.
pub struct RunDir {
    pub path: PathBuf,
    pub manifest: RunManifest,
    log: String,
}

pub fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunDir {
    pub fn create(out_dir: &Path, subcommand: &str, config_hash: &str, parameters: serde_json::Value) -> Result<Self> {
        let created = timestamp();
        let stamp = Utc::now().format("%Y%m%dT%H%M%S%.3f").to_string();
        let short = &config_hash[..config_hash.len().min(8)];
        fs::create_dir_all(out_dir)?;
        let mut path = out_dir.join(format!("{subcommand}-{stamp}-{short}"));
        let mut k = 1;
        while path.exists() {
            path = out_dir.join(format!("{subcommand}-{stamp}-{short}-{k}"));
            k += 1;
        }
        fs::create_dir_all(&path)?;
        Ok(RunDir {
            path,
            manifest: RunManifest {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                subcommand: subcommand.to_string(),
                config_hash: config_hash.to_string(),
                parameters,
                created,
                finished: None,
                outputs: Vec::new(),
            },
            log: String::new(),
        })
    }

    pub fn log(&mut self, msg: impl AsRef<str>) {
        let _ = writeln!(self.log, "{} {}", timestamp(), msg.as_ref());
    }

    fn record(&mut self, name: &str) {
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> Result<()> {
        let header = format!(
            "# wallgap {} config={} created={}\n",
            self.manifest.tool_version,
            self.manifest.config_hash,
            timestamp()
        );
        fs::write(self.path.join(name), header + &table.body())?;
        self.record(name);
        self.log(format!("wrote {name}"));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let wrapped = serde_json::json!({
            "config_hash": self.manifest.config_hash,
            "tool_version": self.manifest.tool_version,
            "data": value,
        });
        fs::write(self.path.join(name), serde_json::to_string_pretty(&wrapped)? + "\n")?;
        self.record(name);
        self.log(format!("wrote {name}"));
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let header = format!(
            "# wallgap {} config={}\n",
            self.manifest.tool_version, self.manifest.config_hash
        );
        fs::write(self.path.join(name), header + text)?;
        self.record(name);
        self.log(format!("wrote {name}"));
        Ok(())
    }

    /// Writes the log and the manifest.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.manifest.finished = Some(timestamp());
        self.record(LOG_FILE);
        let header = format!(
            "# wallgap {} config={}\n",
            self.manifest.tool_version, self.manifest.config_hash
        );
        fs::write(self.path.join(LOG_FILE), header + &self.log)?;
        fs::write(
            self.path.join(MANIFEST_FILE),
            serde_json::to_string_pretty(&self.manifest)? + "\n",
        )?;
        Ok(self.path)
    }
}

/// CSV content with leading `#` comment lines removed.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}
