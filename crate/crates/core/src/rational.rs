//! Exact rational scalars, parsing of the `p/q` text format and a few
//! helpers (logarithms of big integers, rounding) shared by every module.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `p/q`, an integer, or a terminating decimal (`0.25` → 1/4).
pub fn parse_rational(tok: &str) -> std::result::Result<Q, String> {
    let tok = tok.trim();
    if tok.is_empty() {
        return Err("empty token".into());
    }
    if let Some((n, d)) = tok.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| format!("bad numerator in `{tok}`"))?;
        let d = BigInt::from_str(d.trim()).map_err(|_| format!("bad denominator in `{tok}`"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{tok}`"));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = tok.split_once('.') {
        let (neg, int) = match int.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, int.strip_prefix('+').unwrap_or(int)),
        };
        if !frac.chars().all(|c| c.is_ascii_digit()) || !int.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad decimal literal `{tok}`"));
        }
        if int.is_empty() && frac.is_empty() {
            return Err(format!("bad decimal literal `{tok}`"));
        }
        let digits = format!("{}{}", if int.is_empty() { "0" } else { int }, frac);
        let mut n = BigInt::from_str(&digits).map_err(|_| format!("bad decimal literal `{tok}`"))?;
        if neg {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Q::new(n, d));
    }
    BigInt::from_str(tok)
        .map(Q::from_integer)
        .map_err(|_| format!("bad rational `{tok}`"))
}

pub fn format_rational(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses the row-per-line matrix fixture format. Blank lines and `#`
/// comments are skipped; rows must all have the same length.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<Q>>> {
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(parse_rational)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|msg| Error::Parse { line: idx + 1, msg })?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("row has {} entries, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, msg: "empty matrix".into() });
    }
    Ok(rows)
}

/// Single-line vector fixture.
pub fn parse_vector(text: &str) -> Result<Vec<Q>> {
    let m = parse_matrix(text)?;
    if m.len() != 1 {
        return Err(Error::Parse { line: 2, msg: "vector file must contain one line".into() });
    }
    Ok(m.into_iter().next().unwrap())
}

/// Natural log of a positive big integer, accurate to f64 precision.
pub fn ln_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "ln of zero");
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap() as f64;
    top.ln() + (shift as f64) * std::f64::consts::LN_2
}

pub fn ln_bigint_abs(x: &BigInt) -> f64 {
    ln_biguint(x.magnitude())
}

/// ln |x| for a nonzero rational.
pub fn ln_abs(x: &Q) -> f64 {
    ln_bigint_abs(x.numer()) - ln_bigint_abs(x.denom())
}

pub fn to_f64(x: &Q) -> f64 {
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    if x.is_zero() {
        return 0.0;
    }
    sign * ln_abs(x).exp()
}

/// Exact conversion of a finite double.
pub fn from_f64(x: f64) -> Q {
    Q::from_float(x).expect("finite float")
}

/// Integer nearest to `x`; ties go to the value of smaller magnitude.
pub fn round_half_toward_zero(x: &Q) -> BigInt {
    let fl = x.floor().to_integer();
    let frac = x - Q::from_integer(fl.clone());
    let half = Q::new(BigInt::one(), BigInt::from(2));
    match frac.cmp(&half) {
        std::cmp::Ordering::Less => fl,
        std::cmp::Ordering::Greater => fl + 1,
        std::cmp::Ordering::Equal => {
            let up: BigInt = &fl + 1;
            if up.abs() < fl.abs() {
                up
            } else {
                fl
            }
        }
    }
}

/// `round(n / d)` for integers with `d > 0`, ties toward zero.
pub fn round_div(n: &BigInt, d: &BigInt) -> BigInt {
    debug_assert!(d.is_positive());
    let (fl, rem) = n.div_mod_floor(d);
    let twice: BigInt = &rem * 2;
    match twice.cmp(d) {
        std::cmp::Ordering::Less => fl,
        std::cmp::Ordering::Greater => fl + 1,
        std::cmp::Ordering::Equal => {
            let up: BigInt = &fl + 1;
            if up.abs() < fl.abs() {
                up
            } else {
                fl
            }
        }
    }
}

pub fn lcm_of_denominators<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Truncation of `x` to a dyadic rational with `bits` fractional bits.
pub fn truncate_dyadic(x: f64, bits: u32) -> Q {
    let scale = BigInt::one() << bits;
    let exact = from_f64(x) * Q::from_integer(scale.clone());
    Q::new(exact.floor().to_integer(), scale)
}

/// Dyadic truncation of the golden ratio `(1 + sqrt 5) / 2` with `bits`
/// fractional bits, computed with integer square roots (no floating point).
pub fn golden_ratio_truncation(bits: u32) -> Q {
    let scale = BigInt::one() << bits;
    let five_scaled = BigInt::from(5) * &scale * &scale;
    let sqrt5 = five_scaled.sqrt();
    Q::new(&scale + sqrt5, BigInt::from(2) * scale)
}

/// Extended nonnegative rational used for exponents that may be infinite.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtQ {
    Finite(Q),
    Infinite,
}

impl ExtQ {
    pub fn finite(&self) -> Option<&Q> {
        match self {
            ExtQ::Finite(x) => Some(x),
            ExtQ::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtQ::Infinite)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtQ::Finite(x) => to_f64(x),
            ExtQ::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for ExtQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtQ::Finite(x) => write!(f, "{}", format_rational(x)),
            ExtQ::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for ExtQ {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(ExtQ::Infinite),
            other => parse_rational(other).map(ExtQ::Finite),
        }
    }
}

impl Serialize for ExtQ {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtQ {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing rationals as `p/q` strings.
pub mod serde_q {
    use super::*;

    pub fn serialize<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_q_vec {
    use super::*;

    pub fn serialize<S: serde::Serializer>(xs: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| parse_rational(s).map_err(serde::de::Error::custom)).collect()
    }
}

pub mod serde_q_mat {
    use super::*;

    pub fn serialize<S: serde::Serializer>(m: &[Vec<Q>], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(|row| row.iter().map(format_rational).collect::<Vec<_>>()))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Q>>, D::Error> {
        let v = Vec::<Vec<String>>::deserialize(d)?;
        v.iter()
            .map(|row| row.iter().map(|s| parse_rational(s).map_err(serde::de::Error::custom)).collect())
            .collect()
    }
}

pub fn is_sign_negative(x: &BigInt) -> bool {
    x.sign() == Sign::Minus
}
