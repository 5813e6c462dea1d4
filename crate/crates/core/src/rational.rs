//! Exact rationals used for every frustration, bound and conductance value.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Small exact rational; numerators and denominators here are counts of
/// strings, constraints or edges, so `u64` is ample.
pub type Rational = Ratio<u64>;

/// Arbitrary-precision rational for random-walk probabilities.
pub type BigRational = Ratio<BigInt>;

/// Formats as `p/q` in lowest terms, including `0/1` and `1/1`.
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn format_big(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or a bare integer `p`.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: u64 = num
        .parse()
        .map_err(|_| Error::validation(format!("bad rational numerator in {s:?}")))?;
    let den: u64 = den
        .parse()
        .map_err(|_| Error::validation(format!("bad rational denominator in {s:?}")))?;
    if den == 0 {
        return Err(Error::validation(format!("zero denominator in {s:?}")));
    }
    Ok(Ratio::new(num, den))
}

/// Parses a promise parameter, which must lie strictly between 0 and 1.
pub fn parse_epsilon(s: &str) -> Result<Rational> {
    let eps = parse(s)?;
    if eps.is_zero() || eps >= Rational::one() {
        return Err(Error::validation(format!("epsilon {s} is not in (0,1)")));
    }
    Ok(eps)
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn to_big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub(crate) mod serde_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_str(&super::format(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|s| super::parse_epsilon(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}
