//! Fixtures shared by the benchmarks.

use morphseg_core::data::{parse_dataset, Dataset, Vocabulary};
use morphseg_core::model::ModelDims;
use morphseg_core::training::{init_params, TrainConfig};

pub use morphseg_core::model::ModelParams;

const WORDS: &str = "\
nikaua\tni|kaua
tikaua\tti|kaua
nimikike\tni|miki|ke
timikiya\tti|miki|ya
kauatsi\tkaua|tsi
nep+tikuyekai\tne|p+|ti|kuye|kai
onemokokowaya\to|ne|mo|kokowa|ya
tlakatl\ttlaka|tl
";

pub fn corpus() -> Dataset {
    parse_dataset(WORDS, "bench", None).expect("fixture parses")
}

pub fn model(dims: ModelDims) -> (Vocabulary, ModelParams) {
    let ds = corpus();
    let vocab = Vocabulary::build([&ds], &[]);
    let config = TrainConfig {
        dims,
        ..TrainConfig::default()
    };
    let model = init_params(&config, &vocab, 1);
    (vocab, model)
}

/// `n` prediction/gold pairs cycling through the fixture segmentations,
/// predictions shifted by one word.
pub fn segmentation_pairs(n: usize) -> (Vec<String>, Vec<String>) {
    let golds: Vec<String> = corpus().examples.iter().map(|e| e.target_string()).collect();
    let k = golds.len();
    ((0..n).map(|i| golds[(i + 1) % k].clone()).collect(), (0..n).map(|i| golds[i % k].clone()).collect())
}
