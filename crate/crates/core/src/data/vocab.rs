use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, LangTag, SegExample, TaskMarker, SEPARATOR};

/// Every entry of a [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Pad,
    Bos,
    Eos,
    Unk,
    Sep,
    Task(TaskMarker),
    Lang(LangTag),
    Char(char),
}

const RESERVED: [Symbol; 11] = [
    Symbol::Pad,
    Symbol::Bos,
    Symbol::Eos,
    Symbol::Unk,
    Symbol::Sep,
    Symbol::Task(TaskMarker::Seg),
    Symbol::Task(TaskMarker::Ae),
    Symbol::Lang(LangTag::Mx),
    Symbol::Lang(LangTag::Na),
    Symbol::Lang(LangTag::Wx),
    Symbol::Lang(LangTag::Yn),
];

impl Symbol {
    pub fn spelling(self) -> String {
        match self {
            Symbol::Pad => "<pad>".into(),
            Symbol::Bos => "<s>".into(),
            Symbol::Eos => "</s>".into(),
            Symbol::Unk => "<unk>".into(),
            Symbol::Sep => SEPARATOR.to_string(),
            Symbol::Task(t) => t.symbol().into(),
            Symbol::Lang(l) => l.symbol().into(),
            Symbol::Char(c) => c.to_string(),
        }
    }
}

/// Bijection between symbols and dense indices: the reserved symbols come
/// first in a fixed order, then the alphabet in code-point order.
///
/// The decoder's output layer covers only `EOS`, the separator and the
/// alphabet; [`Vocabulary::to_output`] maps into that smaller index space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    alphabet: Vec<char>,
    char_index: HashMap<char, usize>,
}

impl Vocabulary {
    pub const PAD: usize = 0;
    pub const BOS: usize = 1;
    pub const EOS: usize = 2;
    pub const UNK: usize = 3;
    pub const SEP: usize = 4;

    /// Alphabet = every character of every source, target and aux word.
    pub fn build<'a>(
        datasets: impl IntoIterator<Item = &'a Dataset>,
        aux_words: &[String],
    ) -> Self {
        let mut chars: Vec<char> = datasets
            .into_iter()
            .flat_map(|d| d.examples.iter())
            .flat_map(|e| e.source.chars().chain(e.morphs().iter().flat_map(|m| m.chars())))
            .chain(aux_words.iter().flat_map(|w| w.chars()))
            .collect();
        chars.sort_unstable();
        chars.dedup();
        Self::from_alphabet(chars)
    }

    pub fn from_alphabet(mut alphabet: Vec<char>) -> Self {
        alphabet.sort_unstable();
        alphabet.dedup();
        alphabet.retain(|&c| c != SEPARATOR);
        let char_index = alphabet
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, RESERVED.len() + i))
            .collect();
        Vocabulary {
            alphabet,
            char_index,
        }
    }

    /// Rebuilds from a full listing as produced by [`Vocabulary::spellings`].
    pub fn from_spellings(listing: &[String]) -> Result<Self, DataError> {
        let bad = |m: String| DataError::InvalidConfig(format!("vocabulary listing: {m}"));
        if listing.len() < RESERVED.len() {
            return Err(bad("missing reserved symbols".into()));
        }
        for (sym, got) in RESERVED.iter().zip(listing) {
            if sym.spelling() != *got {
                return Err(bad(format!("expected `{}`, found `{got}`", sym.spelling())));
            }
        }
        let mut alphabet = Vec::new();
        for s in &listing[RESERVED.len()..] {
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => alphabet.push(c),
                _ => return Err(bad(format!("`{s}` is not a single character"))),
            }
        }
        let vocab = Self::from_alphabet(alphabet.clone());
        if vocab.alphabet != alphabet {
            return Err(bad("alphabet is not in code-point order".into()));
        }
        Ok(vocab)
    }

    pub fn spellings(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.symbol(i).spelling()).collect()
    }

    pub fn len(&self) -> usize {
        RESERVED.len() + self.alphabet.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn reserved_count() -> usize {
        RESERVED.len()
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn symbol(&self, index: usize) -> Symbol {
        if index < RESERVED.len() {
            RESERVED[index]
        } else {
            Symbol::Char(self.alphabet[index - RESERVED.len()])
        }
    }

    pub fn index_of(&self, symbol: Symbol) -> Option<usize> {
        match symbol {
            Symbol::Char(c) => self.char_index.get(&c).copied(),
            s => RESERVED.iter().position(|&r| r == s),
        }
    }

    pub fn char_index(&self, c: char) -> Option<usize> {
        self.char_index.get(&c).copied()
    }

    pub fn contains_char(&self, c: char) -> bool {
        self.char_index.contains_key(&c)
    }

    /// Size of the decoder output layer: EOS, separator, alphabet.
    pub fn output_size(&self) -> usize {
        2 + self.alphabet.len()
    }

    pub fn to_output(&self, index: usize) -> Option<usize> {
        match index {
            Self::EOS => Some(0),
            Self::SEP => Some(1),
            i if i >= RESERVED.len() && i < self.len() => Some(i - RESERVED.len() + 2),
            _ => None,
        }
    }

    pub fn from_output(&self, output: usize) -> usize {
        match output {
            0 => Self::EOS,
            1 => Self::SEP,
            o => o - 2 + RESERVED.len(),
        }
    }

    pub fn encode(&self, ex: &SegExample) -> EncodedExample {
        let (source, mut lossy) = self.encode_word(&ex.source, ex.task, ex.lang);
        let mut target = Vec::with_capacity(ex.source.len() + ex.morphs().len());
        for (i, m) in ex.morphs().iter().enumerate() {
            if i > 0 {
                target.push(Self::SEP);
            }
            for c in m.chars() {
                target.push(self.char_index(c).unwrap_or_else(|| {
                    lossy = true;
                    Self::UNK
                }));
            }
        }
        target.push(Self::EOS);
        EncodedExample {
            source,
            target,
            lossy,
        }
    }

    /// Source indices for a bare word with optional markers; the flag is
    /// set when a character had to be mapped to UNK.
    pub fn encode_word(
        &self,
        word: &str,
        task: Option<TaskMarker>,
        lang: Option<LangTag>,
    ) -> (Vec<usize>, bool) {
        let mut source = Vec::with_capacity(word.len() + 2);
        source.extend(lang.and_then(|l| self.index_of(Symbol::Lang(l))));
        source.extend(task.and_then(|t| self.index_of(Symbol::Task(t))));
        let mut lossy = false;
        for c in word.chars() {
            source.push(self.char_index(c).unwrap_or_else(|| {
                lossy = true;
                Self::UNK
            }));
        }
        (source, lossy)
    }

    /// Inverse of [`Vocabulary::encode`]. Unknown characters decode to U+FFFD.
    pub fn decode(&self, enc: &EncodedExample) -> Result<SegExample, DataError> {
        let mut task = None;
        let mut lang = None;
        let mut source = String::new();
        for &i in &enc.source {
            match self.symbol(i) {
                Symbol::Lang(l) if source.is_empty() && task.is_none() && lang.is_none() => {
                    lang = Some(l)
                }
                Symbol::Task(t) if source.is_empty() && task.is_none() => task = Some(t),
                Symbol::Char(c) => source.push(c),
                Symbol::Unk => source.push(char::REPLACEMENT_CHARACTER),
                other => {
                    return Err(DataError::InvalidConfig(format!(
                        "unexpected {other:?} in encoded source"
                    )))
                }
            }
        }
        let body = enc.target.strip_suffix(&[Self::EOS]).unwrap_or(&enc.target);
        let seg = self.render(body);
        Ok(SegExample::from_segmentation(source, &seg)?
            .with_task(task)
            .with_lang(lang))
    }

    /// Renders vocabulary indices as text, separators as `|`, stopping at EOS.
    pub fn render(&self, ids: &[usize]) -> String {
        let mut out = String::new();
        for &i in ids {
            match self.symbol(i) {
                Symbol::Eos => break,
                Symbol::Sep => out.push(SEPARATOR),
                Symbol::Char(c) => out.push(c),
                Symbol::Unk => out.push(char::REPLACEMENT_CHARACTER),
                _ => {}
            }
        }
        out
    }
}

/// Index sequences for one example. `target` ends with EOS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    /// Set when a character was missing from the vocabulary.
    pub lossy: bool,
}

impl EncodedExample {
    /// Teacher-forcing decoder input: BOS followed by the target minus its
    /// final EOS.
    pub fn decoder_input(&self) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.target.len());
        v.push(Vocabulary::BOS);
        v.extend_from_slice(&self.target[..self.target.len() - 1]);
        v
    }
}
