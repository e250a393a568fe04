//! Tab-separated tables and the JSON report. Numbers are written with a
//! fixed format so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Significant digits after the point in every numeric cell.
pub const PRECISION: usize = 12;

pub struct Table {
    header: Vec<&'static str>,
    body: String,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), body: String::new() }
    }

    pub fn row(&mut self, cells: &[f64]) {
        debug_assert_eq!(cells.len(), self.header.len());
        for (i, v) in cells.iter().enumerate() {
            if i > 0 {
                self.body.push('\t');
            }
            // `-0` and `0` must not differ between runs that agree numerically.
            let v = if *v == 0.0 { 0.0 } else { *v };
            write!(self.body, "{v:.PRECISION$e}").unwrap();
        }
        self.body.push('\n');
    }

    fn render(&self) -> String {
        format!("# {}\n{}", self.header.join("\t"), self.body)
    }
}

/// Collects the files of one run.
pub struct Writer {
    dir: PathBuf,
    tsv: bool,
    json: bool,
    pub files: Vec<PathBuf>,
}

impl Writer {
    pub fn create(dir: &Path, tsv: bool, json: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), tsv, json, files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    pub fn table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        if self.tsv {
            self.write(name, &table.render())?;
        }
        Ok(())
    }

    pub fn report(&mut self, report: &impl Serialize) -> Result<(), CliError> {
        if self.json {
            let mut text = serde_json::to_string_pretty(report)
                .map_err(|e| CliError::Io(format!("cannot serialise report: {e}")))?;
            text.push('\n');
            self.write("report.json", &text)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_have_a_fixed_format() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&[1.5, -0.0]);
        assert_eq!(t.render(), "# a\tb\n1.500000000000e0\t0.000000000000e0\n");
    }
}
