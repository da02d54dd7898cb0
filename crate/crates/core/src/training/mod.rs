//! Optimization, model selection, replicate runs and checkpoints.

mod adadelta;
mod checkpoint;
mod config;
mod replicates;
mod trainer;

pub use adadelta::{adadelta_step, AdadeltaState};
pub use checkpoint::{Checkpoint, CheckpointMeta, FORMAT_VERSION};
pub use config::{default_m, TrainConfig};
pub use replicates::{run_replicates, Experiment, MeanStd, ReplicateRun, ReplicateSummary};
pub use trainer::{
    init_params, mark_for_mode, select_best, train, train_step, train_with, EvalPoint, RunHistory,
    TrainEvent, TrainOutcome, INIT_RANGE,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::data::DataError;
use crate::evaluation::EvaluateError;
use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    Value { key: String, value: String },
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvaluateError),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("dev set is empty")]
    EmptyDev,
    #[error("non-finite training loss ({loss}) in epoch {epoch}")]
    NonFinite { epoch: usize, loss: f64 },
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file")]
    NotACheckpoint,
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint is truncated or corrupt (checksum mismatch)")]
    Integrity,
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
