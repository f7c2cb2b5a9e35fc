//! Reader for multiprecision reference values stored as JSON lines.
//!
//! The first line is a header object `{"header": {...}}` describing the grid and
//! working precision; every other line is one [`FixtureRecord`].

use std::io::BufRead;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantity {
    J,
    Y,
    H1,
    Jp,
    Yp,
    H1p,
    J2Y2,
    JJpYYp,
    K0,
    K1,
    #[serde(rename = "THETA_REAL_AXIS")]
    ThetaRealAxis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub nu: f64,
    pub z_re: f64,
    pub z_im: f64,
    pub quantity: Quantity,
    pub value_re: f64,
    pub value_im: f64,
    pub precision_digits: u32,
}

impl FixtureRecord {
    pub fn z(&self) -> Complex<f64> {
        Complex::new(self.z_re, self.z_im)
    }

    pub fn value(&self) -> Complex<f64> {
        Complex::new(self.value_re, self.value_im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSet {
    pub header: serde_json::Value,
    pub records: Vec<FixtureRecord>,
}

#[derive(Deserialize)]
struct HeaderLine {
    header: serde_json::Value,
}

impl FixtureSet {
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut header = None;
        let mut records = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Domain(format!("fixture read failed: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            if n == 0 {
                if let Ok(h) = serde_json::from_str::<HeaderLine>(&line) {
                    header = Some(h.header);
                    continue;
                }
            }
            let rec: FixtureRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Domain(format!("fixture line {}: {e}", n + 1)))?;
            if rec.precision_digits < 30 {
                return Err(Error::Domain(format!(
                    "fixture line {} carries only {} digits",
                    n + 1,
                    rec.precision_digits
                )));
            }
            records.push(rec);
        }
        let header = header.ok_or_else(|| Error::Domain("fixture file has no header line".into()))?;
        Ok(Self { header, records })
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Domain(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(std::io::BufReader::new(file))
    }

    pub fn of(&self, quantity: Quantity) -> impl Iterator<Item = &FixtureRecord> {
        self.records.iter().filter(move |r| r.quantity == quantity)
    }

    /// The record of `quantity` at exactly `(nu, z)`.
    pub fn lookup(&self, nu: f64, z: Complex<f64>, quantity: Quantity) -> Option<&FixtureRecord> {
        self.records
            .iter()
            .find(|r| r.quantity == quantity && r.nu == nu && r.z_re == z.re && r.z_im == z.im)
    }
}
