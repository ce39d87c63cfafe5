//! Variable names and their normalized identity.

use alloc::string::String;
use core::fmt;

use serde::{Serialize, Serializer};

/// Lowercases, trims and collapses internal whitespace runs to one space.
///
/// Empty input yields empty output; callers decide whether that is an error.
pub fn normalize_name(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in word.chars() {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// A diagram variable. Identity (equality against other names in a diagram)
/// is the normalized form; the raw spelling is kept for display and emission.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VariableName {
    raw: String,
    normalized: String,
}

impl VariableName {
    /// Returns `None` when `raw` is blank.
    pub fn new(raw: &str) -> Option<Self> {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return None;
        }
        Some(Self {
            raw: String::from(trimmed),
            normalized: normalize_name(trimmed),
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn normalized(&self) -> &str {
        &self.normalized
    }

    /// True when both names denote the same variable.
    pub fn same_as(&self, other: &VariableName) -> bool {
        self.normalized == other.normalized
    }
}

/// Serializes as the raw spelling.
impl Serialize for VariableName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

impl fmt::Display for VariableName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}
