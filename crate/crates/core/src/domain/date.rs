use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Calendar date of a publication. Missing month or day default to January / the 1st.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PaperDate(NaiveDate);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("date `{0}` is not of the form YYYY, YYYY-MM or YYYY-MM-DD")]
pub struct DateError(pub String);

impl PaperDate {
    pub fn new(year: i32, month: u32, day: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(year, month, day).map(Self)
    }

    pub fn from_year(year: i32) -> Option<Self> {
        Self::new(year, 1, 1)
    }

    /// Sentinel used for records whose date the provider does not know.
    /// It sorts after every real date so date filters treat it as "too new".
    pub fn unknown() -> Self {
        Self(NaiveDate::MAX)
    }

    pub fn year(&self) -> i32 {
        self.0.year()
    }

    pub fn month(&self) -> u32 {
        self.0.month()
    }

    pub fn day(&self) -> u32 {
        self.0.day()
    }
}

impl FromStr for PaperDate {
    type Err = DateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DateError(s.to_string());
        let trimmed = s.trim();
        let mut parts = trimmed.split('-');
        let year: i32 = parts
            .next()
            .filter(|p| p.len() == 4)
            .and_then(|p| p.parse().ok())
            .ok_or_else(err)?;
        let month: u32 = match parts.next() {
            Some(p) => p.parse().map_err(|_| err())?,
            None => 1,
        };
        let day: u32 = match parts.next() {
            Some(p) => p.parse().map_err(|_| err())?,
            None => 1,
        };
        if parts.next().is_some() {
            return Err(err());
        }
        Self::new(year, month, day).ok_or_else(err)
    }
}

impl fmt::Display for PaperDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%d"))
    }
}

impl Serialize for PaperDate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PaperDate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Year(i32),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Year(y) => PaperDate::from_year(y)
                .ok_or_else(|| serde::de::Error::custom(format!("invalid year {y}"))),
        }
    }
}
