use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, SegExample, TaskMarker};

/// Training regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Labeled data only.
    S2s,
    /// Multi-task: autoencode unlabeled corpus words, task-marked.
    MttU,
    /// Multi-task: autoencode random strings, task-marked.
    MttR,
    /// Unmarked identity examples from corpus words.
    DaU,
    /// Unmarked identity examples from random strings.
    DaR,
    /// One model over several languages, language-tagged.
    Xling,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::S2s,
        Mode::MttU,
        Mode::MttR,
        Mode::DaU,
        Mode::DaR,
        Mode::Xling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::S2s => "s2s",
            Mode::MttU => "mtt-u",
            Mode::MttR => "mtt-r",
            Mode::DaU => "da-u",
            Mode::DaR => "da-r",
            Mode::Xling => "xling",
        }
    }

    pub fn is_augmented(self) -> bool {
        matches!(self, Mode::MttU | Mode::MttR | Mode::DaU | Mode::DaR)
    }

    pub fn needs_aux_words(self) -> bool {
        matches!(self, Mode::MttU | Mode::DaU)
    }

    pub fn is_multitask(self) -> bool {
        matches!(self, Mode::MttU | Mode::MttR)
    }

    /// Marker carried by labeled (and evaluation) examples in this mode.
    pub fn segmentation_marker(self) -> Option<TaskMarker> {
        self.is_multitask().then_some(TaskMarker::Seg)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| DataError::UnknownMode(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationConfig {
    pub mode: Mode,
    /// Auxiliary set size as a multiple of the labeled set size.
    pub m: usize,
    /// Unlabeled corpus words; required by the `*-U` modes.
    pub aux_words: Option<Vec<String>>,
    pub seed: u64,
}

impl AugmentationConfig {
    pub fn new(mode: Mode, m: usize, seed: u64) -> Self {
        AugmentationConfig {
            mode,
            m,
            aux_words: None,
            seed,
        }
    }

    pub fn with_aux_words(mut self, words: Vec<String>) -> Self {
        self.aux_words = Some(words);
        self
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.mode.is_augmented() && self.m < 1 {
            return Err(DataError::InvalidConfig("m must be at least 1".into()));
        }
        if self.mode.needs_aux_words() && self.aux_words.as_ref().is_none_or(Vec::is_empty) {
            return Err(DataError::InvalidConfig(format!(
                "mode {} needs a non-empty auxiliary word list",
                self.mode
            )));
        }
        Ok(())
    }
}

/// A constructed training corpus plus any warnings raised while building it.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub examples: Vec<SegExample>,
    pub labeled: usize,
    pub auxiliary: usize,
    pub warnings: Vec<String>,
}

/// `n` strings whose lengths are drawn uniformly from `lengths` and whose
/// characters are i.i.d. uniform over `alphabet`.
pub fn generate_random_strings(
    alphabet: &[char],
    n: usize,
    lengths: &[usize],
    seed: u64,
) -> Result<Vec<String>, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_strings(alphabet, n, lengths, &mut rng)
}

fn random_strings(
    alphabet: &[char],
    n: usize,
    lengths: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<String>, DataError> {
    if alphabet.is_empty() {
        return Err(DataError::EmptyAlphabet);
    }
    if n > 0 && lengths.is_empty() {
        return Err(DataError::NoLengths);
    }
    Ok((0..n)
        .map(|_| {
            let len = lengths[rng.random_range(0..lengths.len())].max(1);
            (0..len)
                .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                .collect()
        })
        .collect())
}

/// Builds the examples a model is trained on for `cfg.mode`.
///
/// Augmented modes append `m · |labeled|` identity examples after the
/// labeled ones; the multi-task modes mark labeled examples `<SEG>` and
/// auxiliary ones `<AE>`. Cross-lingual mode concatenates every dataset
/// with its language tag and ignores `m`.
pub fn build_training_corpus(labeled: &[Dataset], cfg: &AugmentationConfig) -> Result<Corpus, DataError> {
    cfg.validate()?;
    let total: usize = labeled.iter().map(Dataset::len).sum();
    if total == 0 {
        return Err(DataError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut warnings = Vec::new();

    if cfg.mode == Mode::Xling {
        let mut examples = Vec::with_capacity(total);
        for ds in labeled {
            let lang = ds.lang.ok_or_else(|| {
                DataError::InvalidConfig("every cross-lingual dataset needs a language tag".into())
            })?;
            examples.extend(
                ds.examples
                    .iter()
                    .map(|e| e.clone().with_task(None).with_lang(Some(lang))),
            );
        }
        return Ok(Corpus {
            labeled: examples.len(),
            auxiliary: 0,
            examples,
            warnings,
        });
    }

    let marker = cfg.mode.segmentation_marker();
    let mut examples: Vec<SegExample> = labeled
        .iter()
        .flat_map(|d| d.examples.iter())
        .map(|e| e.clone().with_task(marker).with_lang(None))
        .collect();
    if !cfg.mode.is_augmented() {
        return Ok(Corpus {
            labeled: examples.len(),
            auxiliary: 0,
            examples,
            warnings,
        });
    }

    let wanted = cfg.m * total;
    let words = match cfg.mode {
        Mode::MttU | Mode::DaU => {
            let pool = dedup(cfg.aux_words.as_deref().unwrap_or_default());
            sample_words(&pool, wanted, &mut rng, &mut warnings)
        }
        _ => {
            let merged = Dataset::new(
                labeled.iter().flat_map(|d| d.examples.iter().cloned()).collect(),
                None,
            );
            random_strings(&merged.alphabet(), wanted, &merged.source_lengths(), &mut rng)?
        }
    };
    let aux_marker = cfg.mode.is_multitask().then_some(TaskMarker::Ae);
    for w in words {
        examples.push(SegExample::identity(w)?.with_task(aux_marker));
    }
    Ok(Corpus {
        labeled: total,
        auxiliary: wanted,
        examples,
        warnings,
    })
}

fn dedup(words: &[String]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    words
        .iter()
        .filter(|w| !w.is_empty() && seen.insert(w.as_str()))
        .cloned()
        .collect()
}

/// Without replacement until the pool is exhausted, then with replacement.
fn sample_words(
    pool: &[String],
    wanted: usize,
    rng: &mut ChaCha8Rng,
    warnings: &mut Vec<String>,
) -> Vec<String> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(rng);
    let mut out: Vec<String> = order.iter().take(wanted).map(|&i| pool[i].clone()).collect();
    if out.len() < wanted {
        warnings.push(format!(
            "auxiliary corpus has {} distinct words but {wanted} were requested; sampling the rest with replacement",
            pool.len()
        ));
        while out.len() < wanted {
            out.push(pool[rng.random_range(0..pool.len())].clone());
        }
    }
    out
}
