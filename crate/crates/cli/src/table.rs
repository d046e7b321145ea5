//! Delimiter-separated result tables with a provenance footer.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Footer {
    pub config_hash: String,
    pub dt: f64,
    pub n_max: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    /// File stem.
    pub name: String,
    /// Column names; dimensional columns end in their unit (`t_ns`, `drive_MHz`).
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub footer: Footer,
}

impl ResultTable {
    pub fn new(name: &str, columns: &[&str], footer: Footer) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            footer,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(CliError::Output(format!(
                    "table {}: non-finite value in row {i}, column {}",
                    self.name, self.columns[j]
                )));
            }
        }
        Ok(())
    }

    pub fn render(&self) -> Result<String, CliError> {
        self.validate()?;
        let mut out = format!("# {}\n", self.columns.join(", "));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
            out.push_str(&cells.join(", "));
            out.push('\n');
        }
        out.push_str(&format!(
            "# config_sha256 = {}, dt_ns = {}, n_max = {}\n",
            self.footer.config_hash,
            format_value(self.footer.dt),
            self.footer.n_max
        ));
        Ok(out)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let text = self.render()?;
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        fs::write(&path, text)?;
        Ok(path)
    }
}

/// Nine significant digits, fixed notation for moderate magnitudes and
/// scientific otherwise, trailing zeros removed.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Config hash recorded in a rendered table, if any.
pub fn footer_hash(text: &str) -> Option<&str> {
    let line = text.lines().rev().find(|l| l.starts_with("# config_sha256 = "))?;
    line.trim_start_matches("# config_sha256 = ").split(',').next().map(str::trim)
}
