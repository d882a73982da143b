//! Tabular output envelopes for the command line and bindings.
//!
//! Every cell is a string so CSV and JSON carry identical records. Rationals
//! are written as an exact `num/den` column plus a 15-significant-digit
//! decimal column.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Parse(format!("unknown format {other:?}, expected csv or json"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEnvelope {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl OutputEnvelope {
    pub fn new(command: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            command: command.into(),
            parameters: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    /// Rows as column-name maps.
    pub fn records(&self) -> Vec<BTreeMap<String, String>> {
        self.rows
            .iter()
            .map(|row| self.columns.iter().cloned().zip(row.iter().cloned()).collect())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// `{"command", "parameters", "rows": [{column: value}]}`
    pub fn to_json(&self) -> String {
        let value = serde_json::json!({
            "command": self.command,
            "parameters": self.parameters,
            "rows": self.records(),
        });
        serde_json::to_string_pretty(&value).expect("string maps serialise")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut s = self.to_json();
                s.push('\n');
                s
            }
        }
    }
}

/// `x` with 15 significant digits; scientific outside `[1e-4, 1e15)`.
pub fn decimal15(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..15).contains(&mag) {
        let decimals = (14 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let int_digits = s.trim_start_matches('-').split('.').next().map_or(0, str::len);
        // rounding may carry into a new leading digit
        if int_digits as i32 > mag + 1 && mag >= 0 {
            if decimals == 0 {
                format!("{x:.14e}")
            } else {
                let decimals = decimals - 1;
                format!("{x:.decimals$}")
            }
        } else {
            s
        }
    } else {
        format!("{x:.14e}")
    }
}

/// `(fraction, decimal)` columns for an exact value.
pub fn rational_cells(x: &ExactRational) -> [String; 2] {
    let decimal = match crate::exact::to_real(x) {
        Ok(v) => decimal15(v),
        Err(_) => "inf".into(),
    };
    [format!("{}/{}", x.numer(), x.denom()), decimal]
}

pub fn opt_decimal(x: Option<f64>) -> String {
    x.map(decimal15).unwrap_or_default()
}
