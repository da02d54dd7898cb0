use std::fs;
use std::path::Path;

use super::{DataError, Dataset, LangTag, SegExample, SEPARATOR};

pub fn load_dataset(path: impl AsRef<Path>, lang: Option<LangTag>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let text = read(path)?;
    parse_dataset(&text, &path.display().to_string(), lang)
}

/// Parses `word<TAB>seg|men|ta|tion` lines. Blank lines and lines starting
/// with `#` are skipped; `origin` only labels error messages.
pub fn parse_dataset(text: &str, origin: &str, lang: Option<LangTag>) -> Result<Dataset, DataError> {
    let mut examples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| DataError::Parse {
            path: origin.to_string(),
            line: idx + 1,
            message,
        };
        let (source, target) = line
            .split_once('\t')
            .ok_or_else(|| err("missing TAB between word and segmentation".into()))?;
        if source.is_empty() {
            return Err(err("empty word".into()));
        }
        if source.contains(SEPARATOR) {
            return Err(err(format!("word `{source}` contains the separator")));
        }
        if target.contains('\t') {
            return Err(err("more than two TAB-separated fields".into()));
        }
        let example = SegExample::from_segmentation(source, target).map_err(|_| {
            err(format!(
                "segmentation `{target}` has an empty morph (adjacent, leading or trailing separator)"
            ))
        })?;
        if example.stripped_target() != source {
            return Err(err(format!(
                "segmentation `{target}` does not spell the word `{source}`"
            )));
        }
        examples.push(example.with_lang(lang));
    }
    Ok(Dataset::new(examples, lang))
}

/// Reads an auxiliary word list, one word per line.
pub fn load_aux_words(path: impl AsRef<Path>) -> Result<Vec<String>, DataError> {
    Ok(parse_aux_words(&read(path.as_ref())?))
}

/// Lowercases, drops blanks and separators, deduplicates keeping first
/// occurrence order.
pub fn parse_aux_words(text: &str) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut words = Vec::new();
    for line in text.lines() {
        let w = line.trim().to_lowercase();
        if w.is_empty() || w.contains(SEPARATOR) || w.contains(char::is_whitespace) {
            continue;
        }
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

fn read(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}
