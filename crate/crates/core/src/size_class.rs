use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Scale family used for colour ranges and channel neighbourhoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    ViolinViola,
    Cello,
}

impl SizeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SizeClass::ViolinViola => "violin_viola",
            SizeClass::Cello => "cello",
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SizeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalise(s).as_str() {
            "violin_viola" => Ok(SizeClass::ViolinViola),
            "cello" => Ok(SizeClass::Cello),
            _ => Err(Error::UnknownSize(s.to_string())),
        }
    }
}

/// Museum size denomination of an instrument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentSize {
    Violin,
    Viola,
    TenorViolin,
    Cello,
    BassViolin,
}

impl InstrumentSize {
    /// Default scale family; tenor violins sit with violas unless overridden.
    pub fn default_size_class(self) -> SizeClass {
        match self {
            InstrumentSize::Violin | InstrumentSize::Viola | InstrumentSize::TenorViolin => {
                SizeClass::ViolinViola
            }
            InstrumentSize::Cello | InstrumentSize::BassViolin => SizeClass::Cello,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InstrumentSize::Violin => "violin",
            InstrumentSize::Viola => "viola",
            InstrumentSize::TenorViolin => "tenor_violin",
            InstrumentSize::Cello => "cello",
            InstrumentSize::BassViolin => "bass_violin",
        }
    }
}

impl FromStr for InstrumentSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match normalise(s).as_str() {
            "violin" => InstrumentSize::Violin,
            "viola" => InstrumentSize::Viola,
            "tenor_violin" => InstrumentSize::TenorViolin,
            "cello" => InstrumentSize::Cello,
            "bass_violin" => InstrumentSize::BassViolin,
            _ => return Err(Error::UnknownSize(s.to_string())),
        })
    }
}

fn normalise(s: &str) -> String {
    s.trim().to_ascii_lowercase().replace([' ', '-'], "_")
}
