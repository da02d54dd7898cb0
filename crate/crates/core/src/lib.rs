//! Character-level neural morphological segmentation.
//!
//! [`autodiff`] is a small tape-based reverse-mode differentiation engine
//! over dense `f64` matrices. [`model`] builds the attention
//! encoder-decoder on top of it, [`data`] turns labeled files into training
//! corpora for every training mode, [`training`] optimizes and persists
//! models, and [`evaluation`] scores segmentations.

pub mod autodiff;
pub mod data;
pub mod evaluation;
pub mod model;
pub mod training;

pub use autodiff::{ParamSet, Tape, Tensor};
pub use data::{Dataset, LangTag, Mode, SegExample, Vocabulary};
pub use evaluation::{border_f1, token_accuracy, EvalReport};
pub use model::{ModelDims, ModelParams};
pub use training::{Checkpoint, TrainConfig};
