//! Minimal CSV writing helpers.
//!
//! All tabular outputs are RFC-4180 style with a header row, `.` decimal
//! separator, and fixed per-column formatting so that identical runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::Result;

/// One CSV cell. Floats carry their formatting so rows stay byte-stable.
#[derive(Debug, Clone)]
pub enum Cell {
    Str(String),
    Int(i64),
    UInt(u64),
    /// Value with a fixed number of decimal places.
    Fixed(f64, usize),
    /// Shortest round-trip float formatting (exact re-parse).
    Float(f64),
}

impl Cell {
    fn write_into(&self, out: &mut String) {
        match self {
            Cell::Str(s) => out.push_str(s),
            Cell::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::UInt(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::Fixed(v, places) => {
                let _ = write!(out, "{v:.places$}", places = places);
            }
            Cell::Float(v) => {
                let _ = write!(out, "{v}");
            }
        }
    }
}

/// In-memory CSV table, written out in one pass.
#[derive(Debug, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.write_into(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(self.render().as_bytes())?;
        w.flush()?;
        Ok(())
    }
}
