//! Probability values that are either exact rationals or floats.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// Arithmetic used by the exact-probability routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    /// Arbitrary-precision rationals.
    Exact,
    /// Log-gamma floats.
    Float,
    /// Exact up to [`EXACT_DEFAULT_LIMIT`] infected nodes, floats beyond.
    #[default]
    Auto,
}

/// Largest `n` for which [`Arithmetic::Auto`] stays exact.
pub const EXACT_DEFAULT_LIMIT: u32 = 500;

impl Arithmetic {
    pub fn is_exact_for(self, n: u32) -> bool {
        match self {
            Arithmetic::Exact => true,
            Arithmetic::Float => false,
            Arithmetic::Auto => n <= EXACT_DEFAULT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Probability {
    Exact(BigRational),
    Float(f64),
}

impl Probability {
    pub fn zero() -> Self {
        Probability::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Probability::Exact(BigRational::one())
    }

    pub fn ratio(num: u64, den: u64) -> Self {
        Probability::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_biguints(num: BigUint, den: BigUint) -> Self {
        Probability::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Probability::Exact(r) => rational_to_f64(r),
            Probability::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Probability::Exact(r) => Some(r),
            Probability::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Probability::Exact(_))
    }

    /// `1 - self`, staying exact when possible.
    pub fn complement(&self) -> Self {
        match self {
            Probability::Exact(r) => Probability::Exact(BigRational::one() - r),
            Probability::Float(x) => Probability::Float(1.0 - x),
        }
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Probability::Exact(r) if r.denom().is_one() => write!(f, "{}", r.numer()),
            Probability::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Probability::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

/// Converts a big rational to the nearest-ish `f64` without overflowing on
/// huge numerators and denominators.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Shift both sides down to 64 significant bits.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 64).max(0) as usize;
    let shift_d = (db - 64).max(0) as usize;
    let n = (r.numer() >> shift_n).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d).to_f64().unwrap_or(1.0);
    n / d * 2f64.powi((shift_n as i64 - shift_d as i64) as i32)
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Formats a float for human output: rounded to 12 decimals, trailing zeros
/// trimmed.
pub fn format_decimal(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}
