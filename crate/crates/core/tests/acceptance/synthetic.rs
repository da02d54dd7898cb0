//! A toy agglutinative language: an optional prefix, one stem and up to two
//! distinct suffixes. Words whose surface string admits more than one
//! segmentation are discarded, so the grammar is its own oracle.

use std::collections::{BTreeMap, BTreeSet};

use morphseg_core::data::{Dataset, LangTag, SegExample};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Grammar {
    pub prefixes: Vec<String>,
    pub stems: Vec<String>,
    pub suffixes: Vec<String>,
}

const CONSONANTS: &[char] = &['p', 't', 'k', 'm', 'n', 's', 'w', 'y', 'r', 'h'];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];

fn syllables(rng: &mut ChaCha8Rng, n: usize) -> String {
    let mut s = String::new();
    for _ in 0..n {
        s.push(*CONSONANTS.choose(rng).unwrap());
        s.push(*VOWELS.choose(rng).unwrap());
    }
    s
}

impl Grammar {
    /// 3 prefixes, 30 stems and 3 suffixes drawn from a fixed seed.
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stems = BTreeSet::new();
        while stems.len() < 30 {
            let n = rng.random_range(2..=3);
            stems.insert(syllables(&mut rng, n));
        }
        let mut stems: Vec<String> = stems.into_iter().collect();
        stems.shuffle(&mut rng);
        Grammar {
            prefixes: vec!["ni".into(), "ta".into(), "ki".into()],
            stems,
            suffixes: vec!["ke".into(), "ya".into(), "tsi".into()],
        }
    }

    fn suffix_chains(&self) -> Vec<Vec<&str>> {
        let mut chains = vec![vec![]];
        for a in &self.suffixes {
            chains.push(vec![a.as_str()]);
            for b in &self.suffixes {
                if a != b {
                    chains.push(vec![a.as_str(), b.as_str()]);
                }
            }
        }
        chains
    }

    /// Every well-formed morph sequence.
    pub fn all_parses(&self) -> Vec<Vec<String>> {
        let mut prefixes: Vec<Option<&str>> = vec![None];
        prefixes.extend(self.prefixes.iter().map(|p| Some(p.as_str())));
        let mut out = Vec::new();
        for p in &prefixes {
            for s in &self.stems {
                for chain in self.suffix_chains() {
                    let mut morphs: Vec<String> = p.iter().map(|p| p.to_string()).collect();
                    morphs.push(s.clone());
                    morphs.extend(chain.iter().map(|c| c.to_string()));
                    out.push(morphs);
                }
            }
        }
        out
    }

    /// Unambiguous words with their unique segmentation, in a fixed order.
    pub fn words(&self) -> Vec<SegExample> {
        let mut by_surface: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
        for morphs in self.all_parses() {
            by_surface.entry(morphs.concat()).or_default().insert(morphs);
        }
        by_surface
            .into_iter()
            .filter(|(_, parses)| parses.len() == 1)
            .map(|(w, parses)| SegExample::new(w, parses.into_iter().next().unwrap()).unwrap())
            .collect()
    }
}

pub struct Splits {
    pub train: Vec<SegExample>,
    pub dev: Vec<SegExample>,
    pub test: Vec<SegExample>,
    /// Unlabeled grammar words outside the test split.
    pub corpus: Vec<String>,
}

pub fn splits(grammar: &Grammar, seed: u64, train: usize, dev: usize, test: usize) -> Splits {
    let mut words = grammar.words();
    assert!(words.len() >= train + dev + test, "grammar yields {} words", words.len());
    words.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test_set: Vec<SegExample> = words[train + dev..train + dev + test].to_vec();
    let held_out: BTreeSet<&str> = test_set.iter().map(|e| e.source.as_str()).collect();
    let corpus = words
        .iter()
        .filter(|w| !held_out.contains(w.source.as_str()))
        .map(|w| w.source.clone())
        .collect();
    Splits {
        train: words[..train].to_vec(),
        dev: words[train..train + dev].to_vec(),
        test: test_set,
        corpus,
    }
}

pub fn dataset(examples: &[SegExample], lang: Option<LangTag>) -> Dataset {
    Dataset::new(
        examples.iter().cloned().map(|e| e.with_lang(lang)).collect(),
        lang,
    )
}
