//! Exact USD amounts as scaled integers.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Six fractional digits, matching USDC's on-chain precision.
const SCALE: i64 = 1_000_000;
const SCALE_DIGITS: usize = 6;

/// A USD amount held as an integer number of micro-dollars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Usd(i64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseUsdError {
    #[error("empty amount")]
    Empty,
    #[error("invalid amount {0:?}")]
    Invalid(String),
    #[error("amount {0:?} has more than six fractional digits")]
    TooPrecise(String),
    #[error("amount {0:?} is out of range")]
    Overflow(String),
}

impl Usd {
    pub const ZERO: Usd = Usd(0);

    pub const fn from_micros(micros: i64) -> Self {
        Usd(micros)
    }

    pub const fn from_cents(cents: i64) -> Self {
        Usd(cents * (SCALE / 100))
    }

    pub const fn from_dollars(dollars: i64) -> Self {
        Usd(dollars * SCALE)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn checked_mul(self, factor: i64) -> Option<Usd> {
        self.0.checked_mul(factor).map(Usd)
    }
}

impl Add for Usd {
    type Output = Usd;
    fn add(self, rhs: Usd) -> Usd {
        Usd(self.0 + rhs.0)
    }
}

impl Sub for Usd {
    type Output = Usd;
    fn sub(self, rhs: Usd) -> Usd {
        Usd(self.0 - rhs.0)
    }
}

impl Sum for Usd {
    fn sum<I: Iterator<Item = Usd>>(iter: I) -> Usd {
        iter.fold(Usd::ZERO, Add::add)
    }
}

impl FromStr for Usd {
    type Err = ParseUsdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseUsdError::Empty);
        }
        let invalid = || ParseUsdError::Invalid(s.to_string());
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (whole, frac) = match body.split_once('.') {
            Some((w, f)) => (w, f),
            None => (body, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(invalid());
        }
        if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        let frac = frac.trim_end_matches('0');
        if frac.len() > SCALE_DIGITS {
            return Err(ParseUsdError::TooPrecise(s.to_string()));
        }
        let overflow = || ParseUsdError::Overflow(s.to_string());
        let whole: i64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| overflow())? };
        let mut frac_micros: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| invalid())? };
        for _ in frac.len()..SCALE_DIGITS {
            frac_micros *= 10;
        }
        let micros = whole.checked_mul(SCALE).and_then(|w| w.checked_add(frac_micros)).ok_or_else(overflow)?;
        Ok(Usd(if negative { -micros } else { micros }))
    }
}

impl fmt::Display for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / SCALE as u64;
        let frac = abs % SCALE as u64;
        let mut frac = format!("{frac:06}");
        while frac.len() > 2 && frac.ends_with('0') {
            frac.pop();
        }
        write!(f, "{sign}{whole}.{frac}")
    }
}

impl Serialize for Usd {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Usd {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct UsdVisitor;

        impl Visitor<'_> for UsdVisitor {
            type Value = Usd;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal USD amount as a number or string")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Usd, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Usd, E> {
                i64::try_from(v)
                    .ok()
                    .and_then(|d| d.checked_mul(SCALE))
                    .map(Usd)
                    .ok_or_else(|| E::custom("amount out of range"))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Usd, E> {
                v.checked_mul(SCALE).map(Usd).ok_or_else(|| E::custom("amount out of range"))
            }

            // Display of f64 is the shortest string that round-trips, so a
            // literal such as 0.1 in a config file parses back to exactly 0.1.
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Usd, E> {
                if !v.is_finite() {
                    return Err(E::custom("amount must be finite"));
                }
                format!("{v}").parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(UsdVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_common_forms() {
        assert_eq!("1.00".parse::<Usd>().unwrap(), Usd::from_dollars(1));
        assert_eq!("0.01".parse::<Usd>().unwrap(), Usd::from_cents(1));
        assert_eq!(".5".parse::<Usd>().unwrap(), Usd::from_cents(50));
        assert_eq!("7".parse::<Usd>().unwrap(), Usd::from_dollars(7));
        assert_eq!("0.000001".parse::<Usd>().unwrap(), Usd::from_micros(1));
        assert_eq!("-2.5".parse::<Usd>().unwrap(), Usd::from_micros(-2_500_000));
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!("".parse::<Usd>(), Err(ParseUsdError::Empty)));
        assert!(matches!("1.2.3".parse::<Usd>(), Err(ParseUsdError::Invalid(_))));
        assert!(matches!("abc".parse::<Usd>(), Err(ParseUsdError::Invalid(_))));
        assert!(matches!("0.0000001".parse::<Usd>(), Err(ParseUsdError::TooPrecise(_))));
        assert!(matches!("99999999999999999".parse::<Usd>(), Err(ParseUsdError::Overflow(_))));
    }

    #[test]
    fn displays_with_at_least_cents() {
        assert_eq!(Usd::from_dollars(10).to_string(), "10.00");
        assert_eq!(Usd::from_cents(250).to_string(), "2.50");
        assert_eq!(Usd::from_micros(1).to_string(), "0.000001");
        assert_eq!(Usd::from_micros(-1_500_000).to_string(), "-1.50");
    }

    #[test]
    fn json_numbers_and_strings_agree() {
        let a: Usd = serde_json::from_str("0.1").unwrap();
        let b: Usd = serde_json::from_str("\"0.1\"").unwrap();
        let c: Usd = serde_json::from_str("5").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, Usd::from_cents(10));
        assert_eq!(c, Usd::from_dollars(5));
    }

    #[test]
    fn tenth_increments_do_not_drift() {
        let tenth: Usd = "0.1".parse().unwrap();
        let total: Usd = std::iter::repeat(tenth).take(10).sum();
        assert_eq!(total, Usd::from_dollars(1));
    }

    proptest! {
        #[test]
        fn display_round_trips(micros in -10_000_000_000i64..10_000_000_000) {
            let usd = Usd::from_micros(micros);
            prop_assert_eq!(usd.to_string().parse::<Usd>().unwrap(), usd);
        }
    }
}
