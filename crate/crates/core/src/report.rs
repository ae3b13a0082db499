//! Verification reports and tolerance settings.
//!
//! A [`Report`] is a flat list of check records. Its text form is one
//! `key=value` line per check with a fixed field order, so two runs on the
//! same input produce byte-identical output.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

/// Tolerances shared by the verification batteries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    /// Function-value equality.
    pub eps_equal: f64,
    /// Relative contact-set slack.
    pub eps_contact: f64,
    /// Values above this are treated as divergent.
    pub divergence_cap: f64,
}

impl ToleranceConfig {
    pub fn new(eps_equal: f64, eps_contact: f64, divergence_cap: f64) -> Result<Self> {
        for (name, v) in [
            ("eps_equal", eps_equal),
            ("eps_contact", eps_contact),
            ("divergence_cap", divergence_cap),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(ToleranceConfig {
            eps_equal,
            eps_contact,
            divergence_cap,
        })
    }
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            eps_equal: 5e-3,
            eps_contact: 1e-9,
            divergence_cap: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub check: String,
    pub pass: bool,
    pub deviation: f64,
    pub tol: f64,
    pub witness: Option<String>,
}

impl CheckRecord {
    /// Passing iff `deviation ≤ tol`.
    pub fn within(check: impl Into<String>, deviation: f64, tol: f64) -> Self {
        CheckRecord {
            check: check.into(),
            pass: deviation <= tol,
            deviation,
            tol,
            witness: None,
        }
    }

    /// Passing iff `value ≥ threshold`; the deviation column holds the value.
    pub fn at_least(check: impl Into<String>, value: f64, threshold: f64) -> Self {
        CheckRecord {
            check: check.into(),
            pass: value >= threshold,
            deviation: value,
            tol: threshold,
            witness: None,
        }
    }

    pub fn flag(check: impl Into<String>, pass: bool) -> Self {
        CheckRecord {
            check: check.into(),
            pass,
            deviation: 0.0,
            tol: 0.0,
            witness: None,
        }
    }

    pub fn with_witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }
}

impl fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "check={} verdict={} deviation={} tol={}",
            self.check,
            if self.pass { "pass" } else { "fail" },
            sci(self.deviation),
            sci(self.tol)
        )?;
        if let Some(w) = &self.witness {
            write!(f, " witness={w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub name: String,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Self {
        Report {
            name: name.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.checks.push(r);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    /// True iff every check passes (vacuously true when empty).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, check: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.check == check)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        write!(w, "{self}")?;
        Ok(())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "report={} checks={}", self.name, self.checks.len())?;
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Scientific notation with one decimal and a two-digit signed exponent,
/// e.g. `3.2e-07`. Infinite values print as `inf`.
pub fn sci(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.1e}");
    let (mant, exp) = s.split_once('e').expect("`e` formatting has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_format() {
        assert_eq!(sci(3.2e-7), "3.2e-07");
        assert_eq!(sci(1e-6), "1.0e-06");
        assert_eq!(sci(0.0), "0.0e+00");
        assert_eq!(sci(-125.0), "-1.2e+02");
        assert_eq!(sci(f64::INFINITY), "inf");
    }

    #[test]
    fn passing_row_format() {
        let r = CheckRecord::within("moreau", 3.2e-7, 1e-6);
        assert_eq!(r.to_string(), "check=moreau verdict=pass deviation=3.2e-07 tol=1.0e-06");
    }

    #[test]
    fn failing_row_has_witness() {
        let r = CheckRecord::within("holes", 0.5, 0.1).with_witness("(0.1,0.2)");
        assert_eq!(
            r.to_string(),
            "check=holes verdict=fail deviation=5.0e-01 tol=1.0e-01 witness=(0.1,0.2)"
        );
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = Report::new("empty");
        assert_eq!(r.to_string(), "report=empty checks=0\n");
        assert!(r.passed());
    }

    #[test]
    fn tolerances_must_be_positive() {
        assert!(ToleranceConfig::new(1e-3, 1e-9, 1e6).is_ok());
        assert!(ToleranceConfig::new(0.0, 1e-9, 1e6).is_err());
        assert!(ToleranceConfig::new(1e-3, -1.0, 1e6).is_err());
    }
}
