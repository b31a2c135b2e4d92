use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of a configured programming language, e.g. `python`, `cpp`, `java`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LanguageId(String);

impl LanguageId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn python() -> Self {
        Self::new("python")
    }

    pub fn cpp() -> Self {
        Self::new("cpp")
    }

    pub fn java() -> Self {
        Self::new("java")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Display name used in prompts ("Python", "C++", "Java").
    pub fn display_name(&self) -> String {
        match self.0.as_str() {
            "python" => "Python".into(),
            "cpp" => "C++".into(),
            "java" => "Java".into(),
            other => {
                let mut c = other.chars();
                match c.next() {
                    Some(first) => first.to_uppercase().chain(c).collect(),
                    None => String::new(),
                }
            }
        }
    }

    /// Tag used on markdown code fences.
    pub fn fence_tag(&self) -> &str {
        &self.0
    }

    /// Single-letter abbreviation for direction tables (P, C, J).
    pub fn short(&self) -> String {
        match self.0.as_str() {
            "python" => "P".into(),
            "cpp" => "C".into(),
            "java" => "J".into(),
            other => other.chars().next().map(|c| c.to_ascii_uppercase().to_string()).unwrap_or_default(),
        }
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LanguageId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LanguageSetError {
    #[error("at least two languages are required, got {0}")]
    TooFew(usize),
    #[error("pivot language `{0}` is not in the configured set")]
    PivotMissing(LanguageId),
    #[error("language `{0}` is listed twice")]
    Duplicate(LanguageId),
}

/// The configured language set with its designated pivot. Order is the
/// configuration order and drives every iteration over targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLanguageSet", into = "RawLanguageSet")]
pub struct LanguageSet {
    languages: Vec<LanguageId>,
    pivot: LanguageId,
}

#[derive(Serialize, Deserialize)]
struct RawLanguageSet {
    languages: Vec<LanguageId>,
    pivot: LanguageId,
}

impl TryFrom<RawLanguageSet> for LanguageSet {
    type Error = LanguageSetError;

    fn try_from(raw: RawLanguageSet) -> Result<Self, Self::Error> {
        LanguageSet::new(raw.languages, raw.pivot)
    }
}

impl From<LanguageSet> for RawLanguageSet {
    fn from(s: LanguageSet) -> Self {
        RawLanguageSet {
            languages: s.languages,
            pivot: s.pivot,
        }
    }
}

impl LanguageSet {
    pub fn new(languages: Vec<LanguageId>, pivot: LanguageId) -> Result<Self, LanguageSetError> {
        if languages.len() < 2 {
            return Err(LanguageSetError::TooFew(languages.len()));
        }
        for (i, l) in languages.iter().enumerate() {
            if languages[..i].contains(l) {
                return Err(LanguageSetError::Duplicate(l.clone()));
            }
        }
        if !languages.contains(&pivot) {
            return Err(LanguageSetError::PivotMissing(pivot));
        }
        Ok(Self { languages, pivot })
    }

    /// Python pivot with C++ and Java targets.
    pub fn reference() -> Self {
        Self::new(
            vec![LanguageId::python(), LanguageId::java(), LanguageId::cpp()],
            LanguageId::python(),
        )
        .expect("reference set is valid")
    }

    pub fn languages(&self) -> &[LanguageId] {
        &self.languages
    }

    pub fn pivot(&self) -> &LanguageId {
        &self.pivot
    }

    pub fn len(&self) -> usize {
        self.languages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.languages.is_empty()
    }

    pub fn contains(&self, l: &LanguageId) -> bool {
        self.languages.contains(l)
    }

    /// Every language except `source`, in configuration order.
    pub fn targets_for<'a>(&'a self, source: &'a LanguageId) -> impl Iterator<Item = &'a LanguageId> + 'a {
        self.languages.iter().filter(move |l| *l != source)
    }

    /// All ordered (source, target) pairs with source != target.
    pub fn directions(&self) -> Vec<(LanguageId, LanguageId)> {
        let mut out = Vec::new();
        for s in &self.languages {
            for t in self.targets_for(s) {
                out.push((s.clone(), t.clone()));
            }
        }
        out
    }

    pub fn non_pivot_count(&self) -> usize {
        self.languages.len() - 1
    }
}
