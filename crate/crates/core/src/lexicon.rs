//! The fixed name set agents converge on.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ValidationError;

/// 1-based index of a lexicon entry; `NameId(k)` renders as `Ck`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NameId(u32);

impl NameId {
    /// Builds a name id, rejecting 0.
    pub fn new(index: u32) -> Option<Self> {
        (index >= 1).then_some(NameId(index))
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// Position in a 0-based array.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn label(self) -> String {
        format!("C{}", self.0)
    }
}

impl fmt::Display for NameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

impl Serialize for NameId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NameId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.strip_prefix('C')
            .filter(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|digits| digits.parse::<u32>().ok())
            .and_then(NameId::new)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid name label {text:?}")))
    }
}

/// Result of decoding one message: a lexicon entry or nothing.
pub type DecodedName = Option<NameId>;

/// Ordered labels `C1..CM`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    labels: Vec<String>,
}

impl Lexicon {
    pub fn new(size: usize) -> Result<Self, ValidationError> {
        if size < 2 {
            return Err(ValidationError::LexiconTooSmall(size));
        }
        let labels = (1..=size).map(|k| format!("C{k}")).collect();
        Ok(Lexicon { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn contains(&self, name: NameId) -> bool {
        name.slot() < self.labels.len()
    }

    /// Looks up an index in `1..=M`.
    pub fn name(&self, index: u32) -> Option<NameId> {
        NameId::new(index).filter(|n| self.contains(*n))
    }

    pub fn ids(&self) -> impl Iterator<Item = NameId> + '_ {
        (1..=self.labels.len() as u32).map(NameId)
    }
}

/// Builds the lexicon `C1..Cm`.
pub fn make_lexicon(m: usize) -> Result<Lexicon, ValidationError> {
    Lexicon::new(m)
}
