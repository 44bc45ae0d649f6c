//! Metrics tables and their CSV form.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{HarnessError, Result};

/// Column-labelled rows; the first column is the round `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl MetricsTable {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format_sig(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| HarnessError::Io("empty CSV".into()))?
            .split(',')
            .map(str::to_owned)
            .collect();
        let rows = lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                let row = l
                    .split(',')
                    .map(|f| {
                        f.parse::<f64>()
                            .map_err(|_| HarnessError::Io(format!("bad CSV value {f:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if row.len() != header.len() {
                    return Err(HarnessError::Io(format!(
                        "CSV row has {} fields, header has {}",
                        row.len(),
                        header.len()
                    )));
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { header, rows })
    }
}

/// Decimal rendering with 10 significant digits, trailing zeros trimmed (`%.10g`).
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let mut s = trim_zeros(mantissa.to_owned());
        let _ = write!(s, "e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
        s
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

/// Writes the table as UTF-8 CSV with LF line endings.
pub fn emit_csv(table: &MetricsTable, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(table.to_csv_string().as_bytes())
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

pub fn read_csv(path: &Path) -> Result<MetricsTable> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    MetricsTable::parse_csv(&text)
}
