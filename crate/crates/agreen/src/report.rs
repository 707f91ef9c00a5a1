//! Machine-readable reports: a versioned header, key–value summary rows
//! and tab-separated tables. The format is deterministic — identical
//! inputs produce byte-identical output — so golden-file tests and diffs
//! work on the raw bytes.

use crate::Result;
use std::fmt::Write as _;
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Report {
    buf: String,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut buf = String::new();
        writeln!(buf, "agreen-report\tv{FORMAT_VERSION}\t{command}").unwrap();
        Report { buf }
    }

    /// `key<TAB>value` summary row.
    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        writeln!(self.buf, "{key}\t{value}").unwrap();
        self
    }

    /// Summary row with a float in fixed scientific notation.
    pub fn kv_num(&mut self, key: &str, value: f64) -> &mut Self {
        writeln!(self.buf, "{key}\t{value:.12e}").unwrap();
        self
    }

    /// Start a named table; `columns` become the header row.
    pub fn table(&mut self, name: &str, columns: &[&str]) -> &mut Self {
        writeln!(self.buf, "table\t{name}\t{}", columns.join("\t")).unwrap();
        self
    }

    /// One numeric table row.
    pub fn row(&mut self, values: &[f64]) -> &mut Self {
        let cells: Vec<String> = values.iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(self.buf, "row\t{}", cells.join("\t")).unwrap();
        self
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    /// Write to the given path, or to stdout when no path is set.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        match out {
            Some(path) => std::fs::write(path, &self.buf)?,
            None => print!("{}", self.buf),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_is_deterministic() {
        let build = || {
            let mut r = Report::new("capacity");
            r.kv("body", "square");
            r.kv_num("capacity", 1.0 / 3.0);
            r.table("t", &["a", "b"]).row(&[1.0, 2.0]);
            r.as_str().to_string()
        };
        assert_eq!(build(), build());
        assert!(build().starts_with("agreen-report\tv1\tcapacity\n"));
    }
}
