//! Labeled columns written as CSV with full-precision floats.

use std::fs::File;
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("column `{name}` has {found} rows, expected {expected}")]
    Ragged {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Float(Vec<f64>),
    Int(Vec<u64>),
    Text(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Float(v) => v.len(),
            Column::Int(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Column::Float(v) => format_float(v[row]),
            Column::Int(v) => v[row].to_string(),
            Column::Text(v) => v[row].clone(),
        }
    }
}

/// Seventeen significant digits, so every `f64` reads back exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    columns: Vec<(String, Column)>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, column: Column) -> Self {
        self.columns.push((name.into(), column));
        self
    }

    pub fn floats(self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.with(name, Column::Float(values))
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    fn check(&self) -> Result<usize, TableError> {
        let n = self.rows();
        for (name, c) in &self.columns {
            if c.len() != n {
                return Err(TableError::Ragged {
                    name: name.clone(),
                    expected: n,
                    found: c.len(),
                });
            }
        }
        Ok(n)
    }

    /// Header row plus one line per row, LF-terminated.
    pub fn to_csv(&self) -> Result<Vec<u8>, TableError> {
        let n = self.check()?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| TableError::Io {
            path: "<memory>".into(),
            source: e.into(),
        };
        w.write_record(self.columns.iter().map(|(h, _)| h.as_str())).map_err(io)?;
        for r in 0..n {
            w.write_record(self.columns.iter().map(|(_, c)| c.cell(r))).map_err(io)?;
        }
        w.into_inner().map_err(|e| TableError::Io {
            path: "<memory>".into(),
            source: e.into_error(),
        })
    }
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<(), TableError> {
    let bytes = table.to_csv()?;
    let io = |source| TableError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = File::create(path).map_err(io)?;
    f.write_all(&bytes).map_err(io)?;
    Ok(())
}
