//! Exact rational scalars shared by every module.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number used for every time, rate and volume.
pub type Q = BigRational;

/// Shorthand for an integer-valued rational.
pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Shorthand for `n / d`. Panics on `d == 0`.
pub fn ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty number")]
    Empty,
    #[error("`{0}` is not an integer or a `p/q` fraction")]
    Malformed(String),
    #[error("`{0}` has a zero denominator")]
    ZeroDenominator(String),
}

/// Parses `"7"`, `"-3"` or `"2/3"`. Decimal points and exponents are rejected so
/// that every accepted input is exactly representable.
pub fn parse_rational(text: &str) -> Result<Q, ParseRationalError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let parse_int = |s: &str| -> Result<BigInt, ParseRationalError> {
        let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseRationalError::Malformed(text.to_string()));
        }
        BigInt::from_str(s).map_err(|_| ParseRationalError::Malformed(text.to_string()))
    };
    let n = parse_int(num)?;
    let d = parse_int(den)?;
    if d.is_zero() {
        return Err(ParseRationalError::ZeroDenominator(text.to_string()));
    }
    Ok(Q::new(n, d))
}

/// Canonical text form: `"3"` for integers, `"-2/3"` otherwise.
pub fn format_rational(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Lossy conversion for plotting and floating-point screening.
pub fn to_f64(q: &Q) -> f64 {
    use num_traits::ToPrimitive;
    match (q.numer().to_i64(), q.denom().to_i64()) {
        // exact up to one rounding when both parts fit in 53 bits
        (Some(n), Some(d)) if n.unsigned_abs() < 1 << 53 && d < 1 << 53 => n as f64 / d as f64,
        _ => q.to_f64().unwrap_or(f64::NAN),
    }
}

pub fn min_q<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max_q<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a >= b {
        a
    } else {
        b
    }
}

/// A rational extended by `+∞`. Used for storage capacities, step lengths and horizons.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Extended {
    Finite(Q),
    Infinite,
}

impl Extended {
    pub fn finite(&self) -> Option<&Q> {
        match self {
            Extended::Finite(q) => Some(q),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinite)
    }

    pub fn min(self, other: Extended) -> Extended {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Extended::Finite(q) => q.is_positive(),
            Extended::Infinite => true,
        }
    }
}

impl From<Q> for Extended {
    fn from(q: Q) -> Self {
        Extended::Finite(q)
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Extended {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a.cmp(b),
            (Extended::Finite(_), Extended::Infinite) => Ordering::Less,
            (Extended::Infinite, Extended::Finite(_)) => Ordering::Greater,
            (Extended::Infinite, Extended::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(q) => f.write_str(&format_rational(q)),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

/// Parses a rational or the literal `inf`.
pub fn parse_extended(text: &str) -> Result<Extended, ParseRationalError> {
    match text.trim() {
        "inf" | "+inf" | "infinity" => Ok(Extended::Infinite),
        other => parse_rational(other).map(Extended::Finite),
    }
}

/// Serde adapter storing a rational as its canonical string.
pub mod serde_q {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        value_to_q(&v).map_err(de::Error::custom)
    }

    /// Accepts JSON integers or `"p/q"` strings.
    pub fn value_to_q(v: &serde_json::Value) -> Result<Q, String> {
        match v {
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Ok(int(i)),
                None => Err(format!("number {n} is not an integer; write fractions as \"p/q\"")),
            },
            serde_json::Value::String(s) => parse_rational(s).map_err(|e| e.to_string()),
            other => Err(format!("expected a rational, found {other}")),
        }
    }
}

/// Serde adapter for `Vec<Q>`.
pub mod serde_q_vec {
    use super::*;
    use serde::{de, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(qs: &[Q], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(qs.len()))?;
        for q in qs {
            seq.serialize_element(&format_rational(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let vs = Vec::<serde_json::Value>::deserialize(d)?;
        vs.iter()
            .map(|v| serde_q::value_to_q(v).map_err(de::Error::custom))
            .collect()
    }
}

/// Serde adapter for [`Extended`], written as a rational string or `"inf"`.
pub mod serde_ext {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Extended, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Extended, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::String(s) => parse_extended(s).map_err(de::Error::custom),
            other => serde_q::value_to_q(other)
                .map(Extended::Finite)
                .map_err(de::Error::custom),
        }
    }
}
