//! Exact rational durations, measured in minutes.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A non-negative amount of time in minutes, kept as an exact fraction.
///
/// Formula-level arithmetic never goes through floating point: the horizon
/// `floor(kappa / delta)` sits exactly on integer boundaries for the common
/// configurations, and a rounding error there changes the strengthened formula.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Duration(Ratio<i64>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DurationParseError {
    #[error("empty duration literal")]
    Empty,
    #[error("negative duration `{0}`")]
    Negative(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("malformed duration literal `{0}`")]
    Malformed(String),
    #[error("duration literal `{0}` out of range")]
    Overflow(String),
}

impl Duration {
    pub const ZERO: Duration = Duration(Ratio::new_raw(0, 1));

    pub fn minutes(whole: i64) -> Self {
        assert!(whole >= 0, "negative duration");
        Duration(Ratio::from_integer(whole))
    }

    /// `numer / denom` minutes. Panics on a negative value or zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        let r = Ratio::new(numer, denom);
        assert!(!r.is_negative(), "negative duration");
        Duration(r)
    }

    pub fn from_ratio(r: Ratio<i64>) -> Option<Self> {
        (!r.is_negative()).then_some(Duration(r))
    }

    pub fn as_ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Lossy conversion for reporting and for the numerical simulator.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// `floor(self / other)`, exactly. `other` must be positive.
    pub fn floor_div(&self, other: Duration) -> i64 {
        assert!(!other.is_zero(), "division by a zero duration");
        (self.0 / other.0).floor().to_integer()
    }

    /// True iff `self` is an integer multiple of `unit` (`unit > 0`).
    pub fn is_multiple_of(&self, unit: Duration) -> bool {
        assert!(!unit.is_zero(), "zero unit");
        (self.0 / unit.0).is_integer()
    }

    pub fn checked_sub(&self, other: Duration) -> Option<Duration> {
        (self.0 >= other.0).then(|| Duration(self.0 - other.0))
    }

    pub fn times(&self, k: i64) -> Duration {
        assert!(k >= 0, "negative multiplier");
        Duration(self.0 * k)
    }
}

impl Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl Sub for Duration {
    type Output = Duration;
    /// Panics if the result would be negative; use [`Duration::checked_sub`] otherwise.
    fn sub(self, rhs: Duration) -> Duration {
        self.checked_sub(rhs).expect("negative duration from subtraction")
    }
}

impl Mul<i64> for Duration {
    type Output = Duration;
    fn mul(self, rhs: i64) -> Duration {
        self.times(rhs)
    }
}

impl Div<i64> for Duration {
    type Output = Duration;
    fn div(self, rhs: i64) -> Duration {
        assert!(rhs > 0, "non-positive divisor");
        Duration(self.0 / rhs)
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}min")
    }
}

impl FromStr for Duration {
    type Err = DurationParseError;

    /// Accepts `10`, `2.5`, `10/3`, each optionally followed by `min`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let body = trimmed.strip_suffix("min").unwrap_or(trimmed).trim_end();
        if body.is_empty() {
            return Err(DurationParseError::Empty);
        }
        if body.starts_with('-') {
            return Err(DurationParseError::Negative(s.to_string()));
        }
        let malformed = || DurationParseError::Malformed(s.to_string());
        let overflow = || DurationParseError::Overflow(s.to_string());
        let parse_int = |t: &str| -> Result<i64, DurationParseError> {
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(malformed());
            }
            t.parse::<i64>().map_err(|_| overflow())
        };

        let r = if let Some((n, d)) = body.split_once('/') {
            let n = parse_int(n.trim())?;
            let d = parse_int(d.trim())?;
            if d == 0 {
                return Err(DurationParseError::ZeroDenominator(s.to_string()));
            }
            Ratio::new(n, d)
        } else if let Some((int, frac)) = body.split_once('.') {
            let int = if int.is_empty() { 0 } else { parse_int(int)? };
            let digits = parse_int(frac)?;
            let scale = 10i64.checked_pow(frac.len() as u32).ok_or_else(overflow)?;
            let numer = int
                .checked_mul(scale)
                .and_then(|v| v.checked_add(digits))
                .ok_or_else(overflow)?;
            Ratio::new(numer, scale)
        } else {
            Ratio::from_integer(parse_int(body)?)
        };
        Ok(Duration(r))
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DurationVisitor;

        impl Visitor<'_> for DurationVisitor {
            type Value = Duration;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or a rational/decimal string in minutes")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Duration, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Duration, E> {
                i64::try_from(v)
                    .map(Duration::minutes)
                    .map_err(|_| E::custom("duration out of range"))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Duration, E> {
                if v < 0 {
                    return Err(E::custom("negative duration"));
                }
                Ok(Duration::minutes(v))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Duration, E> {
                // Go through the shortest decimal representation so `2.5` is exactly 5/2.
                format!("{v}").parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(DurationVisitor)
    }
}

/// Greatest common divisor of two durations, as the coarsest grid both lie on.
pub fn gcd(a: Duration, b: Duration) -> Duration {
    let (an, ad) = (a.numer(), a.denom());
    let (bn, bd) = (b.numer(), b.denom());
    let l = ad.lcm(&bd);
    let g = (an * (l / ad)).gcd(&(bn * (l / bd)));
    Duration(Ratio::new(g, l))
}
