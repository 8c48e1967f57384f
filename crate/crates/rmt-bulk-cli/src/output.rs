//! CSV emission. Every number is written as a full-precision decimal string
//! followed by a rounded display column.

use std::path::Path;

use crate::{CliError, Result};

/// Shortest decimal string that round-trips the `f64`.
pub fn full(x: f64) -> String {
    format!("{x:e}")
}

pub fn rounded(x: f64) -> String {
    format!("{x:.6e}")
}

/// A CSV table whose numeric columns each expand to `name,name_rounded`.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

pub enum Cell {
    Text(String),
    Num(f64),
    /// Exact decimal string with an `f64` for the rounded column.
    Exact(String, f64),
}

impl Table {
    /// `text` columns come first, then `numeric` columns.
    pub fn new(text: &[&str], numeric: &[&str]) -> Self {
        let mut header: Vec<String> = text.iter().map(|s| s.to_string()).collect();
        for n in numeric {
            header.push(n.to_string());
            header.push(format!("{n}_rounded"));
        }
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        let mut row = Vec::new();
        for c in cells {
            match c {
                Cell::Text(s) => row.push(s),
                Cell::Num(x) => {
                    row.push(full(x));
                    row.push(rounded(x));
                }
                Cell::Exact(s, x) => {
                    row.push(s);
                    row.push(rounded(x));
                }
            }
        }
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s += &r.join(",");
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.render())
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn text(s: impl ToString) -> Cell {
    Cell::Text(s.to_string())
}
