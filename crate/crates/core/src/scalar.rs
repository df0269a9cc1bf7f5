//! Matrix entries that are either exact rationals or doubles.
//!
//! Arithmetic between two exact values stays exact; as soon as a double is
//! involved the result is a double. Structural checks compare exact values
//! exactly and doubles against an absolute tolerance.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::QpError;

/// Default absolute tolerance for structural comparisons of double entries.
pub const EPS_STRUCT: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    /// Always in lowest terms with a positive denominator (guaranteed by `BigRational`).
    Exact(BigRational),
    Real(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn int(v: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    /// Exact `num/den`. Panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn real(v: f64) -> Self {
        Scalar::Real(v)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => rational_to_f64(q),
            Scalar::Real(x) => *x,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Scalar::Exact(_) => true,
            Scalar::Real(x) => x.is_finite(),
        }
    }

    /// Zero test: exact for rationals, `|x| <= eps` for doubles.
    pub fn is_zero_tol(&self, eps: f64) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Real(x) => x.abs() <= eps,
        }
    }

    /// Literal zero, no tolerance. Used where structure (not value) matters.
    pub fn is_exactly_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Real(x) => *x == 0.0,
        }
    }

    /// Strictly negative beyond tolerance.
    pub fn is_negative_tol(&self, eps: f64) -> bool {
        match self {
            Scalar::Exact(q) => q.is_negative(),
            Scalar::Real(x) => *x < -eps,
        }
    }

    pub fn approx_eq(&self, other: &Scalar, eps: f64) -> bool {
        (self - other).is_zero_tol(eps)
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.abs()),
            Scalar::Real(x) => Scalar::Real(x.abs()),
        }
    }

    pub fn checked_div(&self, other: &Scalar) -> Option<Scalar> {
        if other.is_exactly_zero() {
            return None;
        }
        Some(match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a / b),
            _ => Scalar::Real(self.to_f64() / other.to_f64()),
        })
    }

    /// Numeric ordering of the values (exact when both are rational).
    pub fn cmp_value(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            _ => self
                .to_f64()
                .partial_cmp(&other.to_f64())
                .unwrap_or(Ordering::Equal),
        }
    }

    /// Parses either a rational literal (`-3`, `7/4`) or a decimal double.
    pub fn parse_lenient(s: &str) -> Result<Scalar, QpError> {
        let s = s.trim();
        if is_rational_literal(s) {
            return s.parse();
        }
        s.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Scalar::Real)
            .ok_or_else(|| QpError::Parse(format!("not a number: {s:?}")))
    }
}

fn rational_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    q.to_f64().unwrap_or(f64::NAN)
}

/// `^-?\d+(/\d+)?$`
pub fn is_rational_literal(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let mut parts = body.splitn(2, '/');
    let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    match (parts.next(), parts.next()) {
        (Some(n), None) => digits(n),
        (Some(n), Some(d)) => digits(n) && digits(d),
        _ => false,
    }
}

impl FromStr for Scalar {
    type Err = QpError;

    /// Strict rational literal parser.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if !is_rational_literal(s) {
            return Err(QpError::Parse(format!("not a rational literal: {s:?}")));
        }
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let num: BigInt = num
            .parse()
            .map_err(|_| QpError::Parse(format!("bad numerator in {s:?}")))?;
        let den: BigInt = den
            .parse()
            .map_err(|_| QpError::Parse(format!("bad denominator in {s:?}")))?;
        if den.is_zero() {
            return Err(QpError::Parse(format!("zero denominator in {s:?}")));
        }
        Ok(Scalar::Exact(BigRational::new(num, den)))
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Real(v)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::int(v)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Scalar::Exact(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Scalar::Real(x) => write!(f, "{x}"),
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<'a, 'b> $trait<&'b Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'b Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => Scalar::Real(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self) $op (&rhs)
            }
        }
        impl<'b> $trait<&'b Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'b Scalar) -> Scalar {
                (&self) $op rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(-q),
            Scalar::Real(x) => Scalar::Real(-x),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -(&self)
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(_) => serializer.serialize_str(&self.to_string()),
            Scalar::Real(x) => serializer.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ScalarVisitor;

        impl Visitor<'_> for ScalarVisitor {
            type Value = Scalar;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a rational string like \"-3/4\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Scalar, E> {
                Ok(Scalar::Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Scalar, E> {
                Ok(Scalar::Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Scalar, E> {
                Ok(Scalar::Real(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Scalar, E> {
                v.parse().map_err(|e: QpError| E::custom(e.to_string()))
            }
        }

        deserializer.deserialize_any(ScalarVisitor)
    }
}
