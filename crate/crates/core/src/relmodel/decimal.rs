//! Fixed-point decimal numbers.
//!
//! Every number carries exactly four fractional digits as a scaled integer,
//! so grade averages compare the same way on every platform.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use thiserror::Error;

/// Number of fractional digits kept by every [`Decimal`].
pub const SCALE_DIGITS: u32 = 4;
const SCALE: i128 = 10_000;

/// An exact decimal with four fractional digits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decimal(i128);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("`{0}` is not a decimal number")]
    Malformed(String),
    #[error("`{0}` has more than {SCALE_DIGITS} fractional digits")]
    TooPrecise(String),
}

impl Decimal {
    pub const ZERO: Decimal = Decimal(0);

    pub fn from_int(n: i64) -> Self {
        Decimal(n as i128 * SCALE)
    }

    /// Builds a decimal from its scaled representation (value * 10^4).
    pub fn from_scaled(scaled: i128) -> Self {
        Decimal(scaled)
    }

    pub fn scaled(self) -> i128 {
        self.0
    }

    /// Divides by a positive count, rounding half away from zero at the
    /// fourth fractional digit.
    pub fn div_count(self, count: u64) -> Decimal {
        assert!(count > 0, "division by zero count");
        let d = count as i128;
        let q = self.0 / d;
        let r = self.0 % d;
        let bump = if 2 * r.abs() >= d { self.0.signum() } else { 0 };
        Decimal(q + bump)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }
}

impl Add for Decimal {
    type Output = Decimal;
    fn add(self, rhs: Decimal) -> Decimal {
        Decimal(self.0 + rhs.0)
    }
}

impl Sub for Decimal {
    type Output = Decimal;
    fn sub(self, rhs: Decimal) -> Decimal {
        Decimal(self.0 - rhs.0)
    }
}

impl Neg for Decimal {
    type Output = Decimal;
    fn neg(self) -> Decimal {
        Decimal(-self.0)
    }
}

impl Sum for Decimal {
    fn sum<I: Iterator<Item = Decimal>>(iter: I) -> Decimal {
        iter.fold(Decimal::ZERO, Add::add)
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || DecimalError::Malformed(s.to_string());
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        if body.contains('.') && frac_part.is_empty() {
            return Err(malformed());
        }
        if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        if frac_part.len() > SCALE_DIGITS as usize {
            return Err(DecimalError::TooPrecise(s.to_string()));
        }
        // 30 integer digits keeps the scaled value well inside i128.
        if int_part.len() > 30 {
            return Err(malformed());
        }
        let int: i128 = int_part.parse().map_err(|_| malformed())?;
        let mut frac: i128 = 0;
        for (i, b) in frac_part.bytes().enumerate() {
            frac += (b - b'0') as i128 * 10i128.pow(SCALE_DIGITS - 1 - i as u32);
        }
        let magnitude = int * SCALE + frac;
        Ok(Decimal(if negative { -magnitude } else { magnitude }))
    }
}

/// Renders the shortest form with at least one fractional digit: `1.0`,
/// `1.15`, `-0.0005`.
impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.abs();
        let int = abs / SCALE;
        let mut frac = format!("{:04}", abs % SCALE);
        while frac.len() > 1 && frac.ends_with('0') {
            frac.pop();
        }
        write!(f, "{sign}{int}.{frac}")
    }
}

impl PartialEq<i64> for Decimal {
    fn eq(&self, other: &i64) -> bool {
        self.0 == *other as i128 * SCALE
    }
}

impl PartialOrd<i64> for Decimal {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        self.0.partial_cmp(&(*other as i128 * SCALE))
    }
}
