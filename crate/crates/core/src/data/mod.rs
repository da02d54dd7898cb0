//! Datasets, vocabularies, corpus statistics and construction of the
//! training corpora for every training mode.

mod augment;
mod example;
mod io;
mod stats;
mod vocab;

pub use augment::{
    build_training_corpus, generate_random_strings, AugmentationConfig, Corpus, Mode,
};
pub use example::{Dataset, LangTag, SegExample, TaskMarker, SEPARATOR};
pub use io::{load_aux_words, load_dataset, parse_aux_words, parse_dataset};
pub use stats::{corpus_stats, CorpusStats};
pub use vocab::{EncodedExample, Symbol, Vocabulary};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("no source lengths to sample random strings from")]
    NoLengths,
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(String),
    #[error("unknown language tag `{0}` (expected one of mx, na, wx, yn)")]
    UnknownLanguage(String),
    #[error("unknown mode `{0}` (expected s2s, mtt-u, mtt-r, da-u, da-r or xling)")]
    UnknownMode(String),
    #[error("invalid segmentation `{0}`: empty morph")]
    InvalidSegmentation(String),
}
