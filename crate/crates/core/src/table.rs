//! CSV tables with a provenance comment line.
//!
//! Every file starts with `# seed=<seed>, cmd=<command line>`, followed by a
//! header row and RFC 4180 records. Floats are written with 17 significant
//! digits in scientific notation; non-finite values as `NaN`, `inf`, `-inf`.

use std::fmt::Write as _;
use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_owned()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Bool(v) => {
                if *v {
                    "true".into()
                } else {
                    "false".into()
                }
            }
            Cell::Text(s) => quote(s),
        }
    }
}

/// Seed and command line recorded at the top of every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub cmd: String,
}

impl Provenance {
    pub fn new(seed: Option<u64>, cmd: impl Into<String>) -> Self {
        Self { seed, cmd: cmd.into() }
    }

    pub fn line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_owned(), |s| s.to_string());
        format!("# seed={seed}, cmd={}", self.cmd.replace(['\n', '\r'], " "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| (*s).to_owned()).collect(), rows: Vec::new() }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row.
    ///
    /// # Panics
    /// If the row length differs from the header length.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row length does not match header {:?}", self.header);
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: &mut W, provenance: &Provenance) -> io::Result<()> {
        writeln!(out, "{}", provenance.line())?;
        let header: Vec<String> = self.header.iter().map(|h| quote(h)).collect();
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                let _ = write!(line, "{}", cell.render());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, provenance: &Provenance) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf, provenance).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("table output is UTF-8")
    }
}
