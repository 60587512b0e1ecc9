use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A non-negative currency amount with four fractional digits (US dollars).
///
/// Stored as an integer count of 1/10000 dollar so sums are exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cost(u64);

pub const COST_SCALE: u64 = 10_000;

impl Cost {
    pub const ZERO: Cost = Cost(0);

    pub fn from_units(units: u64) -> Self {
        Cost(units)
    }

    pub fn units(&self) -> u64 {
        self.0
    }

    /// Rounds a dollar amount to the nearest 1/10000. Negative or non-finite input is zero.
    pub fn from_dollars(dollars: f64) -> Self {
        if !dollars.is_finite() || dollars <= 0.0 {
            return Cost(0);
        }
        Cost((dollars * COST_SCALE as f64).round() as u64)
    }

    pub fn as_dollars(&self) -> f64 {
        self.0 as f64 / COST_SCALE as f64
    }

    /// Price of `tokens` at `price_per_1k` dollars per thousand tokens.
    pub fn for_tokens(tokens: u64, price_per_1k: f64) -> Self {
        Self::from_dollars(tokens as f64 * price_per_1k / 1000.0)
    }

    /// Mean over `n` items, rounded half-up to the nearest unit.
    pub fn mean(&self, n: usize) -> Cost {
        if n == 0 {
            return Cost(0);
        }
        let n = n as u64;
        Cost((self.0 + n / 2) / n)
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost(self.0 + rhs.0)
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        self.0 += rhs.0;
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Cost> for Cost {
    fn sum<I: Iterator<Item = &'a Cost>>(iter: I) -> Cost {
        iter.copied().sum()
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:04}", self.0 / COST_SCALE, self.0 % COST_SCALE)
    }
}

impl FromStr for Cost {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("invalid currency amount `{s}`");
        let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
        if whole.is_empty() || frac.len() > 4 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: u64 = whole.parse().map_err(|_| bad())?;
        let frac_units: u64 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<4}").parse().map_err(|_| bad())?
        };
        Ok(Cost(whole * COST_SCALE + frac_units))
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
