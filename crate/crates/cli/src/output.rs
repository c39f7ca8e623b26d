//! Run manifests and CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::params::Params;

pub use spread_core::numeric::fmt_f64 as num;

/// Optional number; `None` renders as an empty field.
pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub name: String,
    pub header: String,
    pub rows: Vec<String>,
}

impl CsvTable {
    pub fn new(name: &str, header: &str) -> Self {
        CsvTable {
            name: name.to_string(),
            header: header.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, fields: &[String]) {
        self.rows.push(fields.join(","));
    }

    /// Full file text: hash comment, header, rows, LF endings.
    pub fn render(&self, manifest_hash: &str) -> String {
        let mut s = format!("# manifest_sha256={}\n{}\n", manifest_hash, self.header);
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

/// Every resolved parameter plus versions, in a form `--config` accepts back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub text: String,
}

impl Manifest {
    pub fn new(subcommand: &str, seed: u64, serial: bool, params: &Params) -> Self {
        let mut text = String::new();
        text.push_str("# spreadlab run manifest\n");
        text.push_str(&format!("# subcommand = {}\n", subcommand));
        text.push_str(&format!("# spreadlab_version = {}\n", env!("CARGO_PKG_VERSION")));
        text.push_str(&format!("# spread_core_version = {}\n", spread_core::VERSION));
        text.push_str(&format!("seed = {}\n", seed));
        text.push_str(&format!("serial = {}\n", serial));
        for (k, v) in params.entries() {
            if k == "seed" || k == "serial" {
                continue;
            }
            text.push_str(&format!("{} = {}\n", k, v));
        }
        Manifest { text }
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }
}

/// Writes `manifest.txt` and every table into `dir`; returns the written paths.
pub fn write_outputs(dir: &Path, manifest: &Manifest, tables: &[CsvTable]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::with_capacity(tables.len() + 1);
    let mpath = dir.join("manifest.txt");
    fs::write(&mpath, &manifest.text).map_err(|e| CliError::io(&mpath, e))?;
    written.push(mpath);
    let hash = manifest.sha256();
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        fs::write(&path, t.render(&hash)).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::p;

    #[test]
    fn render_layout() {
        let mut t = CsvTable::new("x", "a,b");
        t.push(&[num(0.5), opt_num(None)]);
        assert_eq!(t.render("ab"), "# manifest_sha256=ab\na,b\n5.0000000000000000e-1,\n");
    }

    #[test]
    fn manifest_is_replayable_and_stable() {
        let mut params = Params::defaults(&[p("alpha", "0.7", "")]);
        params.set("seed", "9");
        let m = Manifest::new("closed-forms", 3, true, &params);
        assert!(m.text.contains("seed = 3\nserial = true\nalpha = 0.7\n"));
        assert!(!m.text.contains("seed = 9"));
        assert_eq!(m.sha256(), Manifest::new("closed-forms", 3, true, &params).sha256());
        assert_eq!(m.sha256().len(), 64);
    }
}
