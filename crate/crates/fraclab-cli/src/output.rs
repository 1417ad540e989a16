//! Check records and CSV emission.
//!
//! Files carry a `#` header with the config hash, the identity the table
//! instantiates and every tolerance check. Floats use a fixed `{:.12e}` format
//! and no timings are written, so reruns are byte-identical.

use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Fixed float formatting for CSV cells and headers.
pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub detail: String,
    pub pass: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), detail: format!("{} <= {}", num(value), num(limit)), pass: value <= limit }
    }

    pub fn ge(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), detail: format!("{} >= {}", num(value), num(limit)), pass: value >= limit }
    }

    pub fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            detail: format!("{} in {} +- {}", num(value), num(target), num(tol)),
            pass: (value - target).abs() <= tol,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), detail: detail.into(), pass }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Result of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub criterion: u8,
    pub title: &'static str,
    /// The identity or property the tables instantiate, in words.
    pub identity: &'static str,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// One-line human summary printed to stdout.
    pub summary: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

pub fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes every table of `outcome` into `dir`, returning the paths.
pub fn write_outcome(dir: &Path, subcommand: &str, hash: &str, seed: u64, outcome: &Outcome) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for t in &outcome.tables {
        let path = dir.join(format!("c{:02}_{}.csv", outcome.criterion, t.name));
        let mut text = String::new();
        let _ = writeln!(text, "# fraclab {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "# subcommand: {}", subcommand);
        let _ = writeln!(text, "# criterion: {} {}", outcome.criterion, outcome.title);
        let _ = writeln!(text, "# identity: {}", outcome.identity);
        let _ = writeln!(text, "# config-sha256: {hash}");
        let _ = writeln!(text, "# seed: {seed}");
        for c in &outcome.checks {
            let _ = writeln!(text, "# check: {} : {} : {}", c.name, c.detail, if c.pass { "PASS" } else { "FAIL" });
        }
        let _ = writeln!(text, "# status: {}", if outcome.passed() { "PASS" } else { "FAIL" });
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&t.columns).map_err(std::io::Error::other)?;
        for r in &t.rows {
            w.write_record(r).map_err(std::io::Error::other)?;
        }
        let body = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        let mut bytes = text.into_bytes();
        bytes.extend_from_slice(&body);
        std::fs::write(&path, bytes)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_compare() {
        assert!(Check::le("a", 1e-9, 1e-8).pass);
        assert!(!Check::le("a", f64::NAN, 1e-8).pass);
        assert!(Check::ge("b", 4.5, 4.0).pass);
        assert!(Check::within("c", 2.04, 2.0, 0.1).pass);
        assert!(!Check::within("c", 2.2, 2.0, 0.1).pass);
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(config_hash(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
