//! Transferability scorers. Every scorer returns a value where higher means
//! better predicted transfer; values are only comparable within one method.

use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

mod logme;
mod pseudo;
mod similarity;

pub use logme::{esm_logme, logme, logme_with, EvidenceFit, LogMeOptions, LogMeResult, TargetContext};
pub use pseudo::{leep, nce};
pub use similarity::{textemb_score, vocab_overlap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    #[cfg_attr(feature = "serde", serde(rename = "esm_logme"))]
    EsmLogme,
    #[cfg_attr(feature = "serde", serde(rename = "logme"))]
    Logme,
    #[cfg_attr(feature = "serde", serde(rename = "leep"))]
    Leep,
    #[cfg_attr(feature = "serde", serde(rename = "nce"))]
    Nce,
    #[cfg_attr(feature = "serde", serde(rename = "textemb"))]
    TextEmb,
    #[cfg_attr(feature = "serde", serde(rename = "vocab"))]
    Vocab,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::EsmLogme, Method::Logme, Method::Leep, Method::Nce, Method::TextEmb, Method::Vocab];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::EsmLogme => "esm_logme",
            Method::Logme => "logme",
            Method::Leep => "leep",
            Method::Nce => "nce",
            Method::TextEmb => "textemb",
            Method::Vocab => "vocab",
        }
    }

    /// LEEP and NCE need class labels.
    pub fn supports_regression(self) -> bool {
        !matches!(self, Method::Leep | Method::Nce)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMethod;

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown method (expected one of esm-logme, logme, leep, nce, textemb, vocab)")
    }
}

impl core::error::Error for UnknownMethod {}

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        let normalized = s.trim().to_ascii_lowercase().replace('-', "_");
        Method::ALL.into_iter().find(|m| m.as_str() == normalized).ok_or(UnknownMethod)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub method: Method,
    pub value: f64,
}

impl Score {
    pub(crate) fn new(method: Method, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFiniteScore(alloc::string::String::from(method.as_str())));
        }
        Ok(Self { method, value })
    }
}
