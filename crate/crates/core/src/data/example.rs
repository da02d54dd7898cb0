use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DataError;

/// External spelling of the morph separator.
pub const SEPARATOR: char = '|';

/// Input symbol distinguishing the two tasks of multi-task training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskMarker {
    Seg,
    Ae,
}

impl TaskMarker {
    pub fn symbol(self) -> &'static str {
        match self {
            TaskMarker::Seg => "<SEG>",
            TaskMarker::Ae => "<AE>",
        }
    }
}

/// Language-specific input symbol for cross-lingual training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LangTag {
    Mx,
    Na,
    Wx,
    Yn,
}

impl LangTag {
    pub const ALL: [LangTag; 4] = [LangTag::Mx, LangTag::Na, LangTag::Wx, LangTag::Yn];

    pub fn symbol(self) -> &'static str {
        match self {
            LangTag::Mx => "L=MX",
            LangTag::Na => "L=NA",
            LangTag::Wx => "L=WX",
            LangTag::Yn => "L=YN",
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            LangTag::Mx => "mx",
            LangTag::Na => "na",
            LangTag::Wx => "wx",
            LangTag::Yn => "yn",
        }
    }
}

impl fmt::Display for LangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for LangTag {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mx" | "mex" | "mexicanero" | "l=mx" => Ok(LangTag::Mx),
            "na" | "nah" | "nahuatl" | "l=na" => Ok(LangTag::Na),
            "wx" | "wix" | "wixarika" | "l=wx" => Ok(LangTag::Wx),
            "yn" | "yorem" | "yorem-nokki" | "l=yn" => Ok(LangTag::Yn),
            _ => Err(DataError::UnknownLanguage(s.to_string())),
        }
    }
}

/// One instance: a word and its segmentation into morphs.
///
/// The target is stored as its morphs, so it can never hold adjacent,
/// leading or trailing separators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegExample {
    pub source: String,
    morphs: Vec<String>,
    pub task: Option<TaskMarker>,
    pub lang: Option<LangTag>,
}

impl SegExample {
    /// Builds an example from morphs; every morph must be non-empty and free
    /// of the separator.
    pub fn new(source: impl Into<String>, morphs: Vec<String>) -> Result<Self, DataError> {
        if morphs.is_empty() || morphs.iter().any(|m| m.is_empty() || m.contains(SEPARATOR)) {
            return Err(DataError::InvalidSegmentation(morphs.join("|")));
        }
        Ok(SegExample {
            source: source.into(),
            morphs,
            task: None,
            lang: None,
        })
    }

    /// Parses a `|`-separated segmentation.
    pub fn from_segmentation(
        source: impl Into<String>,
        segmentation: &str,
    ) -> Result<Self, DataError> {
        Self::new(
            source,
            segmentation.split(SEPARATOR).map(str::to_string).collect(),
        )
    }

    /// Autoencoding instance `w ↦ w`.
    pub fn identity(word: impl Into<String>) -> Result<Self, DataError> {
        let word = word.into();
        Self::new(word.clone(), vec![word])
    }

    pub fn with_task(mut self, task: Option<TaskMarker>) -> Self {
        self.task = task;
        self
    }

    pub fn with_lang(mut self, lang: Option<LangTag>) -> Self {
        self.lang = lang;
        self
    }

    pub fn morphs(&self) -> &[String] {
        &self.morphs
    }

    /// Target with separators rendered as `|`.
    pub fn target_string(&self) -> String {
        self.morphs.join("|")
    }

    /// Target with separators removed.
    pub fn stripped_target(&self) -> String {
        self.morphs.concat()
    }

    pub fn is_segmentable(&self) -> bool {
        self.morphs.len() > 1
    }
}

/// An ordered list of examples, optionally bound to one language.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub examples: Vec<SegExample>,
    pub lang: Option<LangTag>,
}

impl Dataset {
    pub fn new(examples: Vec<SegExample>, lang: Option<LangTag>) -> Self {
        Dataset { examples, lang }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Serializes back to the `word<TAB>segmentation` file format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for ex in &self.examples {
            out.push_str(&ex.source);
            out.push('\t');
            out.push_str(&ex.target_string());
            out.push('\n');
        }
        out
    }

    /// Source lengths in characters.
    pub fn source_lengths(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.source.chars().count()).collect()
    }

    /// Distinct source characters in code-point order.
    pub fn alphabet(&self) -> Vec<char> {
        let mut chars: Vec<char> = self
            .examples
            .iter()
            .flat_map(|e| e.source.chars())
            .collect();
        chars.sort_unstable();
        chars.dedup();
        chars
    }
}
