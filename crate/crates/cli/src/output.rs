use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use resonator_core::Config;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Seventeen significant digits, '.' decimal separator.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with `#` comment lines ahead of the header row.
pub struct Table {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<String>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            comments: Vec::new(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn row(&mut self, cells: &[f64]) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows
            .push(cells.iter().map(|&c| num(c)).collect::<Vec<_>>().join(","));
    }

    /// Row whose first cell is an integer label.
    pub fn labelled_row(&mut self, label: i64, cells: &[f64]) {
        debug_assert_eq!(cells.len() + 1, self.header.len());
        let mut line = label.to_string();
        for &c in cells {
            line.push(',');
            line.push_str(&num(c));
        }
        self.rows.push(line);
    }

    pub fn raw_row(&mut self, cells: &[String]) {
        self.rows.push(cells.join(","));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

/// Collects output files for one run and writes them with a manifest.
pub struct Run {
    dir: PathBuf,
    subcommand: &'static str,
    written: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    config_sha256: String,
    config: serde_json::Value,
    outputs: &'a [String],
    duration_seconds: f64,
}

impl Run {
    pub fn new(dir: &Path, subcommand: &'static str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            subcommand,
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, table.render()).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    pub fn finish(self, config: Option<&Config>, duration_seconds: f64) -> Result<PathBuf> {
        let (hash, echo) = match config {
            Some(c) => {
                let text = c.to_json();
                (sha256_hex(text.as_bytes()), serde_json::from_str(&text)?)
            }
            None => (sha256_hex(b""), serde_json::Value::Null),
        };
        let manifest = Manifest {
            subcommand: self.subcommand,
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: hash,
            config: echo,
            outputs: &self.written,
            duration_seconds,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.subcommand));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}
