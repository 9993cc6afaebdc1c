//! Rational parsing and rendering. Values travel as `"p/q"` strings in JSON.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Largest denominator accepted for decimal input.
pub const MAX_DECIMAL_DENOMINATOR: u64 = 1_000_000;

/// Parses `"p/q"`, an integer, or a decimal that is exact with denominator ≤ 10⁶.
pub fn parse(s: &str) -> Result<Rational> {
    let t = s.trim();
    let err = || Error::Parse(s.to_string());
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    if t.contains(['e', 'E']) {
        return Err(err());
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits: BigInt = format!("0{int}{frac}").parse().map_err(|_| err())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rational::new(if neg { -digits } else { digits }, den);
    if r.denom() > &BigInt::from(MAX_DECIMAL_DENOMINATOR) {
        return Err(err());
    }
    Ok(r)
}

/// Renders `p/q`, or `p` when the denominator is one.
pub fn render(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn from_ratio(r: Ratio<i64>) -> Rational {
    Rational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub fn to_ratio(r: &Rational) -> Result<Ratio<i64>> {
    let n = r.numer().to_i64().ok_or_else(|| Error::Overflow(render(r)))?;
    let d = r.denom().to_i64().ok_or_else(|| Error::Overflow(render(r)))?;
    Ok(Ratio::new(n, d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn positive_part(r: Rational) -> Rational {
    if r.is_negative() {
        Rational::zero()
    } else {
        r
    }
}

/// Serde adapter for `Ratio<i64>` as a `"p/q"` string (numbers are accepted on input).
pub mod serde_level {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<i64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&render(&from_ratio(*r)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Ratio<i64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
            Float(f64),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Str(s) => s,
            Raw::Int(i) => i.to_string(),
            Raw::Float(f) => f.to_string(),
        };
        parse(&text).and_then(|r| to_ratio(&r)).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_exact_decimals() {
        assert_eq!(render(&parse("2/4").unwrap()), "1/2");
        assert_eq!(render(&parse("3").unwrap()), "3");
        assert_eq!(render(&parse("0.25").unwrap()), "1/4");
        assert_eq!(render(&parse("-1.5").unwrap()), "-3/2");
        assert_eq!(render(&parse(".5").unwrap()), "1/2");
        assert_eq!(render(&parse("0.000001").unwrap()), "1/1000000");
    }

    #[test]
    fn rejects_inexact_or_malformed_input() {
        for bad in ["0.0000001", "1/0", "abc", "1e-3", "", ".", "1.2.3"] {
            assert!(parse(bad).is_err(), "{bad}");
        }
    }
}
