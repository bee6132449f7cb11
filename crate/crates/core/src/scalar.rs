//! Numeric modes.
//!
//! Polytope and decomposition work runs over exact rationals; Monte Carlo
//! runs over `f64`. Every analytic routine in this crate is generic over
//! [`Scalar`] so the same code path serves both modes.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Q = BigRational;

/// Absolute tolerance used for every equality check in floating mode.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Which arithmetic a computation runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    #[default]
    Float,
}

pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// `num / den`, exact in rational mode.
    fn ratio(num: i64, den: i64) -> Self;

    /// Lossy conversion used for reporting.
    fn to_f64(&self) -> f64;

    /// Conversion from a double. Exact for rationals (every finite double
    /// is a dyadic rational).
    fn from_f64(value: f64) -> Self;

    /// Equality up to the mode's tolerance: exact for rationals,
    /// [`FLOAT_TOLERANCE`] absolute for doubles.
    fn near(&self, other: &Self) -> bool;

    /// Whether the value is non-negative up to the mode's tolerance.
    fn nonneg(&self) -> bool {
        *self >= Self::zero() || self.near(&Self::zero())
    }

    fn is_exact() -> bool;

    fn from_usize(n: usize) -> Self {
        Self::ratio(n as i64, 1)
    }

    fn half() -> Self {
        Self::ratio(1, 2)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for f64 {
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64(value: f64) -> Self {
        value
    }

    fn near(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOLERANCE
    }

    fn is_exact() -> bool {
        false
    }
}

impl Scalar for Q {
    fn ratio(num: i64, den: i64) -> Self {
        Q::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64(value: f64) -> Self {
        Q::from_float(value).expect("finite double")
    }

    fn near(&self, other: &Self) -> bool {
        self == other
    }

    fn is_exact() -> bool {
        true
    }
}

/// Shorthand for `Q::ratio`.
pub fn q(num: i64, den: i64) -> Q {
    Q::ratio(num, den)
}

/// Parse `"3/8"`, `"1"` or a decimal such as `"0.125"` into an exact rational.
/// Decimals are read as written (base 10), not via their binary double.
pub fn parse_rational(text: &str) -> Option<Q> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n = BigInt::parse_bytes(n.trim().as_bytes(), 10)?;
        let d = BigInt::parse_bytes(d.trim().as_bytes(), 10)?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::parse_bytes(if digits.is_empty() { b"0" } else { digits.as_bytes() }, 10)?;
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = Q::new(numer, denom);
    Some(if neg { -value } else { value })
}

/// Render a rational as `"n/d"` (or `"n"` for integers).
pub fn format_rational(value: &Q) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// `f64` from a rational, for reporting.
pub fn q_to_f64(value: &Q) -> f64 {
    Scalar::to_f64(value)
}

/// Integer-valued `i64` to rational.
pub fn q_int(n: i64) -> Q {
    Q::from_i64(n).expect("i64 fits")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/8"), Some(q(3, 8)));
        assert_eq!(parse_rational("0.125"), Some(q(1, 8)));
        assert_eq!(parse_rational("-0.5"), Some(q(-1, 2)));
        assert_eq!(parse_rational("2"), Some(q(2, 1)));
        assert_eq!(parse_rational(".25"), Some(q(1, 4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn float_near_uses_tolerance() {
        assert!(1.0f64.near(&(1.0 + 1e-10)));
        assert!(!1.0f64.near(&(1.0 + 1e-8)));
        assert!((-1e-12f64).nonneg());
    }

    #[test]
    fn rational_near_is_exact() {
        assert!(q(1, 3).near(&q(2, 6)));
        assert!(!q(1, 3).near(&(q(1, 3) + q(1, 1_000_000_000_000))));
        assert_eq!(format_rational(&q(6, 4)), "3/2");
        assert_eq!(format_rational(&q(4, 2)), "2");
    }
}
