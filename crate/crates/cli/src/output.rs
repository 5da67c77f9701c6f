//! CSV and TOML writing helpers. Floats are written with 17 significant
//! digits so that reading a file back recovers the values exactly.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header column for a quantile probability, e.g. `q0.025`.
pub fn quantile_column(p: f64) -> String {
    format!("q{p}")
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// CSV writer that only becomes visible under its final name on [`CsvFile::finish`].
pub struct CsvFile {
    writer: csv::Writer<File>,
    tmp: PathBuf,
    path: PathBuf,
}

impl CsvFile {
    pub fn create<S: AsRef<str>>(path: &Path, header: &[S]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let tmp = tmp_path(path);
        let mut writer = csv::Writer::from_path(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        writer.write_record(header.iter().map(|h| h.as_ref()))?;
        Ok(Self { writer, tmp, path: path.to_path_buf() })
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<()> {
        self.writer.write_record(fields.iter().map(|f| f.as_ref()))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        drop(self.writer);
        fs::rename(&self.tmp, &self.path).with_context(|| format!("writing {}", self.path.display()))?;
        Ok(())
    }
}

/// Header and rows of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("parsing {}", path.display()))?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).with_context(|| format!("missing column '{name}'"))
    }

    pub fn f64_at(&self, row: usize, col: usize) -> Result<f64> {
        let v = &self.rows[row][col];
        v.parse().with_context(|| format!("row {}: '{v}' is not a number", row + 2))
    }
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let text = toml::to_string(value)?;
    let tmp = tmp_path(path);
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 123456.789, std::f64::consts::PI, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b.csv");
        let mut f = CsvFile::create(&path, &["x", "y"]).unwrap();
        f.row(&[fmt_f64(0.1), fmt_f64(2.0 / 3.0)]).unwrap();
        assert!(!path.exists());
        f.finish().unwrap();
        let t = Table::read(&path).unwrap();
        assert_eq!(t.f64_at(0, t.column("y").unwrap()).unwrap(), 2.0 / 3.0);
    }
}
