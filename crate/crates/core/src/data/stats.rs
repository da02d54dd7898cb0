use std::collections::HashMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

/// Corpus-level counts over the morphs of every target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub words: usize,
    pub seg_words: usize,
    pub morphs: usize,
    pub unique_morphs: usize,
    /// Share of words with more than one morph.
    pub seg_per_word: f64,
    pub morphs_per_word: f64,
    pub max_morphs: usize,
    /// Most frequent morphs, by count descending then morph ascending.
    pub top_morphs: Vec<(String, usize)>,
}

pub fn corpus_stats(ds: &Dataset, top_k: usize) -> Result<CorpusStats, DataError> {
    if ds.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    let mut morphs = 0;
    let mut seg_words = 0;
    let mut max_morphs = 0;
    for ex in &ds.examples {
        let n = ex.morphs().len();
        morphs += n;
        max_morphs = max_morphs.max(n);
        if n > 1 {
            seg_words += 1;
        }
        for m in ex.morphs() {
            *freq.entry(m.as_str()).or_default() += 1;
        }
    }
    let mut top: Vec<(String, usize)> = freq.iter().map(|(m, &c)| (m.to_string(), c)).collect();
    top.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    top.truncate(top_k);
    let words = ds.len();
    Ok(CorpusStats {
        words,
        seg_words,
        morphs,
        unique_morphs: freq.len(),
        seg_per_word: seg_words as f64 / words as f64,
        morphs_per_word: morphs as f64 / words as f64,
        max_morphs,
        top_morphs: top,
    })
}

impl CorpusStats {
    /// Key/value block followed by a frequency/morph table.
    pub fn to_report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "words\t{}", self.words);
        let _ = writeln!(s, "seg_words\t{}", self.seg_words);
        let _ = writeln!(s, "morphs\t{}", self.morphs);
        let _ = writeln!(s, "unique_morphs\t{}", self.unique_morphs);
        let _ = writeln!(s, "seg_per_word\t{:.3}", self.seg_per_word);
        let _ = writeln!(s, "morphs_per_word\t{:.3}", self.morphs_per_word);
        let _ = writeln!(s, "max_morphs\t{}", self.max_morphs);
        if !self.top_morphs.is_empty() {
            s.push('\n');
            s.push_str("frq\tmorph\n");
            for (m, c) in &self.top_morphs {
                let _ = writeln!(s, "{c}\t{m}");
            }
        }
        s
    }
}
