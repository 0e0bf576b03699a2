//! CSV tables and unit conversion at display time.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum DisplayUnits {
    #[default]
    Nats,
    Bits,
}

impl DisplayUnits {
    /// Converts a value held in nats.
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            DisplayUnits::Nats => nats,
            DisplayUnits::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DisplayUnits::Nats => "nats",
            DisplayUnits::Bits => "bits",
        }
    }
}

/// Shortest round-trip representation, switching to exponent form for very
/// small or large magnitudes.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let a = v.abs();
    if a == 0.0 || (1e-4..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// First row whose first cell equals `key`.
    pub fn row(&self, key: &str) -> Option<&[String]> {
        self.rows.iter().find(|r| r[0] == key).map(|r| r.as_slice())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))?;
        Ok(String::from_utf8(bytes)?)
    }

    /// Writes to `out`, or standard output when `None`.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        let text = self.to_csv()?;
        match out {
            Some(path) => {
                let mut f =
                    File::create(path).with_context(|| format!("cannot create output file {}", path.display()))?;
                f.write_all(text.as_bytes())
                    .with_context(|| format!("cannot write output file {}", path.display()))?;
            }
            None => {
                io::stdout().lock().write_all(text.as_bytes())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1e-9), "1e-9");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn bits_conversion() {
        assert!((DisplayUnits::Bits.convert(std::f64::consts::LN_2) - 1.0).abs() < 1e-15);
        assert_eq!(DisplayUnits::Nats.convert(0.3), 0.3);
    }

    #[test]
    fn csv_has_header() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
