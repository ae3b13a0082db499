//! Extended reals `ℝ ∪ {+∞}`.
//!
//! Every function in this crate takes values in the extended half-line; `-∞`
//! is never representable. `+∞` is stored as `f64::INFINITY`, which is a
//! dedicated IEEE sentinel, never a large finite surrogate.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use crate::error::{Error, Result};

/// A value in `ℝ ∪ {+∞}`.
#[derive(Clone, Copy, PartialEq)]
#[repr(transparent)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    /// Rejects NaN and `-∞`.
    pub fn new(v: f64) -> Result<Self> {
        if v.is_nan() {
            Err(Error::InvalidValue("NaN is not an extended real".into()))
        } else if v == f64::NEG_INFINITY {
            Err(Error::InvalidValue("-inf is not representable".into()))
        } else {
            Ok(ExtReal(v))
        }
    }

    /// Panics on a finite-check failure; for literals in code paths that
    /// only ever produce finite values.
    pub fn finite(v: f64) -> Self {
        assert!(v.is_finite(), "expected a finite value, got {v}");
        ExtReal(v)
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        !self.0.is_finite()
    }

    /// Raw representation; `+∞` maps to `f64::INFINITY`.
    pub fn raw(self) -> f64 {
        self.0
    }

    pub fn finite_value(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        // inf + finite = inf; both operands exclude -inf so no NaN arises.
        ExtReal(self.0 + rhs.0)
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{:?}", self.0)
        } else {
            f.write_str("+inf")
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("inf")
        }
    }
}

impl TryFrom<f64> for ExtReal {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        ExtReal::new(v)
    }
}
