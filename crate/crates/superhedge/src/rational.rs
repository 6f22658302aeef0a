//! Exact rational scalars and their extension by the two infinities.
//!
//! Every quantity in this crate is a `Rational` (arbitrary precision, always
//! in lowest terms, positive denominator) or an `ExtendedRational` when a
//! value such as a superhedging price may degenerate to -inf. No floating
//! point is used anywhere in the computational path.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

pub type Rational = num_rational::BigRational;

/// Shorthand for a rational from an integer pair; panics on zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Shorthand for an integer rational.
pub fn int(num: i64) -> Rational {
    Rational::from_integer(BigInt::from(num))
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal {0:?}")]
    Invalid(String),
    #[error("zero denominator in rational literal {0:?}")]
    ZeroDenominator(String),
    #[error("negative denominator in rational literal {0:?}")]
    NegativeDenominator(String),
}

/// Parses "3", "-3/2", "1.5" style literals. A fraction must have a positive
/// denominator; decimals are converted exactly.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let (sign, body) = match s.as_bytes()[0] {
        b'+' => (1, &s[1..]),
        b'-' => (-1, &s[1..]),
        _ => (1, s),
    };
    if body.is_empty() {
        return Err(ParseRationalError::Invalid(s.to_string()));
    }
    let digits = |part: &str| -> Result<BigInt, ParseRationalError> {
        if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseRationalError::Invalid(s.to_string()));
        }
        BigInt::from_str(part).map_err(|_| ParseRationalError::Invalid(s.to_string()))
    };
    let magnitude = if let Some((num, den)) = body.split_once('/') {
        let num = digits(num)?;
        let den = digits(den)?;
        if den.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(s.to_string()));
        }
        Rational::new(num, den)
    } else if let Some((whole, frac)) = body.split_once('.') {
        let whole = digits(whole)?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac = digits(frac)?;
        Rational::new(whole * &scale + frac, scale)
    } else {
        Rational::from_integer(digits(body)?)
    };
    Ok(if sign < 0 { -magnitude } else { magnitude })
}

/// Formats in canonical form: "n" for integers, "n/d" otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A rational extended by -inf and +inf with the obvious total order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtendedRational {
    NegInfinity,
    Finite(Rational),
    PosInfinity,
}

impl ExtendedRational {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtendedRational::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedRational::Finite(_))
    }

    pub fn zero() -> Self {
        ExtendedRational::Finite(Rational::zero())
    }

    /// Adds a finite rational; the infinities absorb.
    pub fn add_finite(&self, r: &Rational) -> Self {
        match self {
            ExtendedRational::Finite(v) => ExtendedRational::Finite(v + r),
            other => other.clone(),
        }
    }
}

impl From<Rational> for ExtendedRational {
    fn from(r: Rational) -> Self {
        ExtendedRational::Finite(r)
    }
}

impl PartialOrd for ExtendedRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedRational {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtendedRational::*;
        match (self, other) {
            (NegInfinity, NegInfinity) | (PosInfinity, PosInfinity) => Ordering::Equal,
            (NegInfinity, _) | (_, PosInfinity) => Ordering::Less,
            (_, NegInfinity) | (PosInfinity, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtendedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedRational::NegInfinity => write!(f, "-inf"),
            ExtendedRational::Finite(r) => write!(f, "{}", format_rational(r)),
            ExtendedRational::PosInfinity => write!(f, "inf"),
        }
    }
}

/// Parses the `Display` form back; accepts "inf", "+inf", "-inf".
pub fn parse_extended(s: &str) -> Result<ExtendedRational, ParseRationalError> {
    match s.trim() {
        "inf" | "+inf" => Ok(ExtendedRational::PosInfinity),
        "-inf" => Ok(ExtendedRational::NegInfinity),
        other => parse_rational(other).map(ExtendedRational::Finite),
    }
}
