//! Bit-stable text formatting and small CSV helpers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{CliError, Result};

/// 17 significant digits in scientific notation, enough to round-trip any
/// `f64`. Infinities and NaN use Rust's spelling (`inf`, `-inf`, `NaN`).
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn parse_real(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

/// CSV writer with a header row; records are written as given.
pub struct Table {
    writer: csv::Writer<BufWriter<File>>,
    path: std::path::PathBuf,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut t = Self { writer: csv::Writer::from_writer(BufWriter::new(file)), path: path.to_path_buf() };
        t.row(header.iter().map(|s| s.to_string()))?;
        Ok(t)
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| CliError::parse(&self.path, e.to_string()))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// Header and string records of a CSV file.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::parse(path, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::parse(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::parse(path, e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_exactly() {
        for x in [0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 6.02e23, -4.9e-324, f64::MAX, f64::MIN_POSITIVE] {
            let s = real(x);
            assert_eq!(parse_real(&s).unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(real(0.1), "1.0000000000000001e-1");
        assert_eq!(parse_real(&real(f64::NEG_INFINITY)), Some(f64::NEG_INFINITY));
        assert!(parse_real(&real(f64::NAN)).unwrap().is_nan());
    }
}
