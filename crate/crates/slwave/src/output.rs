//! CSV and JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Float with 17 significant digits.
pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// A CSV table: comma separated, header row, LF endings.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    text: String,
    columns: usize,
}

/// One CSV cell.
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "row width");
        for (i, c) in cells.into_iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Int(v) => write!(self.text, "{v}").unwrap(),
                Cell::Float(v) => self.text.push_str(&float(v)),
                Cell::Text(s) => self.text.push_str(&s),
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data");
    s.push('\n');
    s
}

/// Writes artifacts into one directory and remembers what was written.
#[derive(Debug)]
pub struct Writer {
    dir: PathBuf,
    csv: bool,
    json: bool,
    pub written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, csv: bool, json: bool) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            csv,
            json,
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, text: &str) -> io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Csv) -> io::Result<()> {
        if self.csv {
            self.put(name, table.as_str())?;
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        if self.json {
            self.put(name, &json(value))?;
        }
        Ok(())
    }

    /// Written regardless of the format selection.
    pub fn always(&mut self, name: &str, text: &str) -> io::Result<()> {
        self.put(name, text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(-2.0), "-2.0000000000000000e0");
        assert_eq!(float(f64::NAN), "NaN");
        let v = 1.0 / 3.0;
        assert_eq!(float(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn table_layout() {
        let mut t = Csv::new(&["n", "v", "s"]);
        t.row(vec![3usize.into(), 0.5.into(), "a".into()]);
        assert_eq!(t.as_str(), "n,v,s\n3,5.0000000000000000e-1,a\n");
    }
}
