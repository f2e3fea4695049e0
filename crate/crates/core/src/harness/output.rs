//! Table and summary writers shared by the commands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::OutputFormat;
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl Cell {
    fn to_csv(self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_float(x),
        }
    }

    fn to_json(self) -> serde_json::Value {
        match self {
            Cell::Int(i) => i.into(),
            Cell::Float(x) => x.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Write `<stem>.csv` or `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str, format: OutputFormat) -> Result<PathBuf> {
        match format {
            OutputFormat::Csv => {
                let path = dir.join(format!("{stem}.csv"));
                self.write_csv(&path)?;
                Ok(path)
            }
            OutputFormat::Json => {
                let path = dir.join(format!("{stem}.json"));
                let records: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|r| {
                        self.header
                            .iter()
                            .cloned()
                            .zip(r.iter().map(|c| c.to_json()))
                            .collect()
                    })
                    .collect();
                write_json(&path, &records)?;
                Ok(path)
            }
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_csv()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Read an occupancy table, keeping every column except `epoch`, `seconds`
/// and the confidence bounds.
pub fn read_occupancy_csv(path: &Path) -> Result<Trajectory> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let keep: Vec<usize> = reader
        .headers()?
        .iter()
        .enumerate()
        .filter(|(_, h)| {
            !matches!(*h, "epoch" | "seconds") && !h.ends_with("_ci_lower") && !h.ends_with("_ci_upper")
        })
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::config(format!("{} has no occupancy columns", path.display())));
    }
    let mut out = Trajectory::new(keep.len());
    let mut row = vec![0.0; keep.len()];
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        for (slot, &i) in row.iter_mut().zip(&keep) {
            let field = record.get(i).unwrap_or("");
            *slot = field.trim().parse().map_err(|_| {
                Error::config(format!(
                    "{}: row {}: `{field}` is not a number",
                    path.display(),
                    line + 1
                ))
            })?;
        }
        out.push_row(&row)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.73, 1e-300, 0.0, 123456.789] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_layout_and_reread() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(["epoch", "seconds", "patch_1", "outside", "patch_1_ci_lower"]);
        t.push(vec![Cell::Int(0), Cell::Float(0.0), Cell::Float(0.25), Cell::Float(0.75), Cell::Float(0.2)]);
        t.push(vec![Cell::Int(1), Cell::Float(60.0), Cell::Float(0.5), Cell::Float(0.5), Cell::Float(0.4)]);
        let path = t.write(dir.path(), "occ", OutputFormat::Csv).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("epoch,seconds,patch_1,outside,patch_1_ci_lower\n0,"));
        assert!(!text.contains('\r'));
        let back = read_occupancy_csv(&path).unwrap();
        assert_eq!(back.shape(), (2, 2));
        assert_eq!(back.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn json_records() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(["run", "probability"]);
        t.push(vec![Cell::Int(3), Cell::Float(0.5)]);
        let path = t.write(dir.path(), "x", OutputFormat::Json).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(v[0]["run"], 3);
        assert_eq!(v[0]["probability"], 0.5);
    }

    #[test]
    fn missing_target_is_io_error() {
        let e = read_occupancy_csv(Path::new("/no/such/file.csv")).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }
}
