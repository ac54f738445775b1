//! CSV panel ingestion: one column per series, one row per date.

use std::path::Path;

use sha2::{Digest, Sha256};
use simcorr::MultivariateSample;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum HeaderMode {
    /// A first row with no numeric cell is a header.
    Auto,
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelFile {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// 1-based file line of each data row.
    pub lines: Vec<u64>,
    /// Lower-case hex SHA-256 of the raw bytes.
    pub digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Line counter over a byte buffer, advanced monotonically.
struct LineCursor<'a> {
    bytes: &'a [u8],
    at: usize,
    line: u64,
}

impl LineCursor<'_> {
    /// 1-based line of the first content byte at or after `offset`; blank
    /// lines skipped by the reader are attributed to the following record.
    fn line_at(&mut self, offset: usize) -> u64 {
        let rest = &self.bytes[offset..];
        let start = offset + rest.iter().take_while(|b| **b == b'\n' || **b == b'\r').count();
        self.line += self.bytes[self.at..start].iter().filter(|b| **b == b'\n').count() as u64;
        self.at = start;
        self.line
    }
}

impl PanelFile {
    pub fn read(path: &Path, delimiter: u8, header: HeaderMode) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&bytes, delimiter, header)
    }

    pub fn parse(bytes: &[u8], delimiter: u8, header: HeaderMode) -> Result<Self, CliError> {
        let digest = sha256_hex(bytes);
        let text = std::str::from_utf8(bytes).map_err(|e| CliError::Data(format!("input is not UTF-8: {e}")))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());

        let mut names = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut lines = Vec::new();
        let mut width = None;
        let mut cursor = LineCursor {
            bytes,
            at: 0,
            line: 1,
        };
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::Data(format!("malformed CSV: {e}")))?;
            let line = record.position().map_or(i as u64 + 1, |p| cursor.line_at(p.byte() as usize));
            if record.iter().all(str::is_empty) {
                continue;
            }
            let is_header = i == 0
                && match header {
                    HeaderMode::Yes => true,
                    HeaderMode::No => false,
                    HeaderMode::Auto => record.iter().all(|c| c.parse::<f64>().is_err()),
                };
            if let Some(w) = width {
                if record.len() != w {
                    return Err(CliError::Data(format!("row {line} has {} columns, expected {w}", record.len())));
                }
            }
            width = Some(record.len());
            if is_header {
                names = record.iter().map(str::to_owned).collect();
                continue;
            }
            let mut row = Vec::with_capacity(record.len());
            for (j, cell) in record.iter().enumerate() {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| CliError::Data(format!("row {line}, column {}: cannot parse {cell:?} as a number", j + 1)))?;
                if !v.is_finite() {
                    return Err(CliError::Data(format!("row {line}, column {}: value {cell:?} is not finite", j + 1)));
                }
                row.push(v);
            }
            rows.push(row);
            lines.push(line);
        }
        let n = width.unwrap_or(0);
        if rows.is_empty() {
            return Err(CliError::Data("panel has no data rows".into()));
        }
        if n < 2 {
            return Err(CliError::Data(format!("panel needs at least 2 columns, found {n}")));
        }
        if names.is_empty() {
            names = (1..=n).map(|j| format!("x{j}")).collect();
        }
        Ok(PanelFile { names, rows, lines, digest })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn sample(&self) -> MultivariateSample {
        MultivariateSample::new(self.rows.clone()).expect("validated rectangular finite panel")
    }

    /// Subtract column means.
    pub fn demeaned(&self) -> Self {
        let t = self.len() as f64;
        let means: Vec<f64> = (0..self.dim()).map(|j| self.rows.iter().map(|r| r[j]).sum::<f64>() / t).collect();
        PanelFile {
            rows: self.rows.iter().map(|r| r.iter().zip(&means).map(|(v, m)| v - m).collect()).collect(),
            ..self.clone()
        }
    }

    /// File line of data row `t`.
    pub fn line_of(&self, t: usize) -> u64 {
        self.lines.get(t).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_detection() {
        let p = PanelFile::parse(b"a,b\n1,2\n2,1\n", b',', HeaderMode::Auto).unwrap();
        assert_eq!(p.names, ["a", "b"]);
        assert_eq!(p.rows, vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert_eq!(p.lines, [2, 3]);
        let q = PanelFile::parse(b"1,2\n2,1\n", b',', HeaderMode::Auto).unwrap();
        assert_eq!(q.names, ["x1", "x2"]);
        assert_eq!(q.len(), 2);
    }

    #[test]
    fn errors_name_row_and_column() {
        let e = PanelFile::parse(b"a,b\n1,2\n3,abc\n", b',', HeaderMode::Auto).unwrap_err();
        assert!(e.to_string().contains("row 3, column 2"), "{e}");
        let e = PanelFile::parse(b"1,2\n3\n", b',', HeaderMode::Auto).unwrap_err();
        assert!(e.to_string().contains("row 2"), "{e}");
        let e = PanelFile::parse(b"1,inf\n", b',', HeaderMode::Auto).unwrap_err();
        assert!(e.to_string().contains("not finite"));
        assert!(PanelFile::parse(b"1\n2\n", b',', HeaderMode::Auto).is_err());
        assert!(PanelFile::parse(b"a,b\n", b',', HeaderMode::Auto).is_err());
    }

    #[test]
    fn delimiter_and_blank_lines() {
        let p = PanelFile::parse(b"1;2;3\n\n4;5;6\n", b';', HeaderMode::No).unwrap();
        assert_eq!(p.dim(), 3);
        assert_eq!(p.lines, [1, 3]);
    }

    #[test]
    fn demeaning() {
        let p = PanelFile::parse(b"1,4\n3,8\n", b',', HeaderMode::No).unwrap().demeaned();
        assert_eq!(p.rows, vec![vec![-1.0, -2.0], vec![1.0, 2.0]]);
    }
}
