//! Tab-separated numeric tables with a header row.
//!
//! Values are written in the shortest form that parses back to the same
//! `f64`, so a write/read cycle is lossless and output is deterministic.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{IoError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    /// One vector per named column, all the same length.
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(IoError::Table(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if let Some(first) = columns.first() {
            if columns.iter().any(|c| c.len() != first.len()) {
                return Err(IoError::Table("columns differ in length".into()));
            }
        }
        if names.iter().any(|n| n.contains(['\t', '\n'])) {
            return Err(IoError::Table("column names may not contain tabs or newlines".into()));
        }
        Ok(Self { names, columns })
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.names.join("\t");
        out.push('\n');
        for r in 0..self.rows() {
            for (i, c) in self.columns.iter().enumerate() {
                if i > 0 {
                    out.push('\t');
                }
                write!(out, "{}", c[r]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| IoError::Table("empty table".into()))?;
        let names: Vec<String> = header.split('\t').map(|s| s.trim().to_string()).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != names.len() {
                return Err(IoError::Table(format!(
                    "row {} has {} fields, header has {}",
                    lineno + 1,
                    fields.len(),
                    names.len()
                )));
            }
            for (col, field) in columns.iter_mut().zip(fields) {
                let v: f64 = field.trim().parse().map_err(|_| {
                    IoError::Table(format!("row {}: cannot parse {field:?}", lineno + 1))
                })?;
                col.push(v);
            }
        }
        Self::new(names, columns)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| IoError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::parse_tsv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_ragged_rows() {
        assert!(Table::parse_tsv("a\tb\n1\t2\n3\n").is_err());
        assert!(Table::parse_tsv("a\tb\n1\tx\n").is_err());
    }

    proptest! {
        #[test]
        fn tsv_round_trip_is_lossless(rows in proptest::collection::vec((any::<f64>(), -1e300f64..1e300), 0..20)) {
            let rows: Vec<(f64, f64)> = rows.into_iter().filter(|(a, _)| a.is_finite()).collect();
            let t = Table::new(
                vec!["x".into(), "y".into()],
                vec![rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect()],
            ).unwrap();
            prop_assert_eq!(Table::parse_tsv(&t.to_tsv()).unwrap(), t);
        }
    }
}
