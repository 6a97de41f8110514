//! Writers for CSV, JSON and SVG artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gapbif::report::PropertyReport;
use serde::Serialize;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Output directory plus the list of files written so far.
pub struct Artifacts {
    dir: PathBuf,
    seed: u64,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(dir: &Path, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), seed, written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// A `# seed=N` line, the header row, then one record per row.
    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let path = self.path(name);
        let mut file = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        writeln!(file, "# seed={}", self.seed)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn report_csv(&mut self, name: &str, report: &PropertyReport) -> Result<()> {
        let rows: Vec<Vec<String>> = report.rows.iter().map(|r| r.iter().map(|x| num(*x)).collect()).collect();
        self.csv(name, &report.columns, &rows)
    }

    /// Pretty JSON with the seed recorded next to the payload.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Stamped<'a, T> {
            seed: u64,
            #[serde(flatten)]
            body: &'a T,
        }
        let path = self.path(name);
        let text = serde_json::to_string_pretty(&Stamped { seed: self.seed, body: value })?;
        fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    /// Registers a file produced by another writer (the SVG backend).
    pub fn record(&mut self, path: PathBuf) {
        self.written.push(path);
    }
}
