use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{GradStore, Tape, Tensor};
use crate::data::{EncodedExample, LangTag, Mode, SegExample, Vocabulary};
use crate::evaluation::evaluate;
use crate::model::{ModelError, ModelParams, ParamKind};

use super::{
    adadelta_step, AdadeltaState, Checkpoint, CheckpointMeta, TrainConfig, TrainError,
};

/// Half-width of the uniform initialization of non-recurrent weights.
pub const INIT_RANGE: f64 = 0.08;

/// Batches sorted by length together after each shuffle.
const BUCKET_BATCHES: usize = 8;

/// Recurrent matrices start as the identity, biases at zero, and every
/// other weight uniform in `±INIT_RANGE`.
pub fn init_params(config: &TrainConfig, vocab: &Vocabulary, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ModelParams::new_with(config.dims, vocab.len(), vocab.output_size(), |spec| {
        let [r, c] = spec.shape;
        match spec.kind {
            ParamKind::Recurrent => Tensor::identity(r),
            ParamKind::Bias => Tensor::zeros(&[r, c]),
            ParamKind::Weight => {
                let data = (0..r * c)
                    .map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE))
                    .collect();
                Tensor::matrix(r, c, data).expect("shape matches data")
            }
        }
    })
}

/// Dev accuracy at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub epoch: usize,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunHistory {
    /// Summed training loss of every completed epoch.
    pub epoch_losses: Vec<f64>,
    pub evaluations: Vec<EvalPoint>,
    pub selected_epoch: usize,
    pub selected_accuracy: f64,
    /// True when the run ended before `max_epochs`.
    pub stopped_early: bool,
    /// Target probabilities floored during the loss computation.
    pub clamped: usize,
}

/// Index of the best evaluation point; the earliest wins ties.
pub fn select_best(points: &[EvalPoint]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        if best.is_none_or(|b| p.dev_accuracy > points[b].dev_accuracy) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainEvent {
    Epoch { epoch: usize, loss: f64 },
    Eval { epoch: usize, dev_accuracy: f64, best: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub history: RunHistory,
}

/// Dev and test examples as the model sees them in `mode`: the segmentation
/// marker for multi-task modes, language tags only in cross-lingual mode.
pub fn mark_for_mode(config: &TrainConfig, examples: &[SegExample]) -> Vec<SegExample> {
    let task = config.mode.segmentation_marker();
    let keep_lang = config.mode == Mode::Xling;
    examples
        .iter()
        .cloned()
        .map(|e| {
            let lang = if keep_lang { e.lang } else { None };
            e.with_task(task).with_lang(lang)
        })
        .collect()
}

/// Sums the batch NLL, backpropagates and applies one optimizer step.
/// Returns the batch loss and the number of floored probabilities.
pub fn train_step(
    model: &mut ModelParams,
    vocab: &Vocabulary,
    batch: &[&EncodedExample],
    state: &mut AdadeltaState,
    rho: f64,
    eps: f64,
) -> Result<(f64, usize), TrainError> {
    let (loss, clamped, grads) = {
        let mut tape = Tape::new();
        let loss = model.batch_nll(&mut tape, vocab, batch)?;
        let value = tape.value(loss.total).data()[0];
        if !value.is_finite() {
            return Err(TrainError::NonFinite { epoch: 0, loss: value });
        }
        let grads = tape.backward(loss.total).map_err(ModelError::from)?;
        (value, tape.clamped_probabilities(), GradStore::from_backward(model.params(), &grads))
    };
    adadelta_step(model.params_mut(), &grads, state, rho, eps);
    Ok((loss, clamped))
}

fn epoch_batches(
    order: &mut [usize],
    encoded: &[EncodedExample],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    order.shuffle(rng);
    let mut batches = Vec::new();
    for window in order.chunks_mut(batch_size * BUCKET_BATCHES) {
        window.sort_by_key(|&i| encoded[i].source.len());
        batches.extend(window.chunks(batch_size).map(<[usize]>::to_vec));
    }
    batches.shuffle(rng);
    batches
}

/// Trains one model and returns the checkpoint with the best dev accuracy.
pub fn train(
    config: &TrainConfig,
    vocab: &Vocabulary,
    corpus: &[SegExample],
    dev: &[SegExample],
    langs: &[LangTag],
) -> Result<TrainOutcome, TrainError> {
    train_with(config, vocab, corpus, dev, langs, &mut |_| {})
}

/// [`train`] with a callback receiving per-epoch and per-evaluation events.
pub fn train_with(
    config: &TrainConfig,
    vocab: &Vocabulary,
    corpus: &[SegExample],
    dev: &[SegExample],
    langs: &[LangTag],
    observer: &mut dyn FnMut(&TrainEvent),
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if dev.is_empty() {
        return Err(TrainError::EmptyDev);
    }
    let dev = mark_for_mode(config, dev);
    let encoded: Vec<EncodedExample> = corpus.iter().map(|e| vocab.encode(e)).collect();
    let mut model = init_params(config, vocab, config.seed);
    let mut state = AdadeltaState::new(model.params());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..encoded.len()).collect();

    let mut history = RunHistory::default();
    let mut best: Option<ModelParams> = None;
    for epoch in 1..=config.max_epochs {
        let mut epoch_loss = 0.0;
        for batch in epoch_batches(&mut order, &encoded, config.batch_size, &mut rng) {
            let refs: Vec<&EncodedExample> = batch.iter().map(|&i| &encoded[i]).collect();
            let (loss, clamped) =
                train_step(&mut model, vocab, &refs, &mut state, config.rho, config.eps)
                    .map_err(|e| match e {
                        TrainError::NonFinite { loss, .. } => TrainError::NonFinite { epoch, loss },
                        other => other,
                    })?;
            epoch_loss += loss;
            history.clamped += clamped;
        }
        history.epoch_losses.push(epoch_loss);
        observer(&TrainEvent::Epoch { epoch, loss: epoch_loss });

        if epoch % config.eval_every != 0 && epoch != config.max_epochs {
            continue;
        }
        let acc = evaluate(&model, vocab, &dev)?.accuracy;
        let improved = best.is_none() || acc > history.selected_accuracy;
        history.evaluations.push(super::EvalPoint { epoch, dev_accuracy: acc });
        if improved {
            history.selected_epoch = epoch;
            history.selected_accuracy = acc;
            best = Some(model.clone());
        }
        observer(&TrainEvent::Eval {
            epoch,
            dev_accuracy: acc,
            best: improved,
        });
        if config.stop_on_perfect_dev && acc == 1.0 {
            history.stopped_early = epoch < config.max_epochs;
            break;
        }
    }

    let meta = CheckpointMeta {
        mode: config.mode,
        m: config.m,
        seed: config.seed,
        epoch: history.selected_epoch,
        dev_accuracy: history.selected_accuracy,
        langs: langs.to_vec(),
    };
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            vocab: vocab.clone(),
            model: best.expect("at least one evaluation"),
            meta,
        },
        history,
    })
}
