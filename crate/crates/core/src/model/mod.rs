//! Character-level attention encoder-decoder.
//!
//! A bidirectional GRU reads the source; a GRU decoder attends over the
//! concatenated encoder states with additive scoring and emits a softmax
//! over EOS, the separator and the alphabet. All entry points work on
//! padded batches; padding positions are masked out of attention and loss
//! and leave every per-example quantity unchanged.

mod params;

pub use params::{GruIds, ModelDims, ModelParams, ParamKind, ParamSpec};

use thiserror::Error;

use crate::autodiff::{AutodiffError, NodeId, Tape, Tensor};
use crate::data::{EncodedExample, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("source sequence is empty")]
    EmptySource,
    #[error("empty batch")]
    EmptyBatch,
    #[error("target symbol {0} is outside the output alphabet")]
    UnknownTarget(usize),
    #[error("symbol index {index} outside vocabulary of size {size}")]
    BadSymbol { index: usize, size: usize },
    #[error("parameter `{name}`: {message}")]
    Layout { name: String, message: String },
}

/// Encoder output for a batch.
pub struct EncoderStates {
    /// Per position, `[batch × 2·hidden]` concatenated forward/backward states.
    pub states: Vec<NodeId>,
    /// Per position, the attention projection of `states`.
    projected: Vec<NodeId>,
    /// Row-major `[batch × positions]`; false on padding.
    pub mask: Vec<bool>,
    pub lengths: Vec<usize>,
    /// Decoder initial state, `tanh` of the projected final backward state.
    pub init: NodeId,
}

impl EncoderStates {
    pub fn batch(&self) -> usize {
        self.lengths.len()
    }

    pub fn positions(&self) -> usize {
        self.states.len()
    }
}

/// One decoder step's results.
pub struct StepOutput {
    /// `[batch × output_size]` probability rows.
    pub dist: NodeId,
    pub state: NodeId,
    /// `[batch × positions]` attention weights used for this step.
    pub attention: NodeId,
}

/// Loss nodes for a teacher-forced batch.
pub struct BatchLoss {
    /// Scalar sum over the batch.
    pub total: NodeId,
    /// `[batch × 1]` per-example negative log-likelihoods.
    pub per_example: NodeId,
}

/// Greedy decoding result for one source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    /// Emitted vocabulary indices, EOS excluded.
    pub symbols: Vec<usize>,
    /// Rendered output, separators as `|`.
    pub text: String,
    /// True when decoding hit the length limit before EOS.
    pub truncated: bool,
}

/// Default decoding limit for a word of `chars` characters.
pub fn max_decode_len(chars: usize) -> usize {
    2 * chars + 5
}

impl ModelParams {
    fn check_symbols(&self, ids: &[usize]) -> Result<(), ModelError> {
        match ids.iter().find(|&&i| i >= self.vocab_size()) {
            Some(&index) => Err(ModelError::BadSymbol {
                index,
                size: self.vocab_size(),
            }),
            None => Ok(()),
        }
    }

    fn gru_step<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        g: &GruIds,
        x: NodeId,
        h: NodeId,
    ) -> Result<NodeId, ModelError> {
        let p = self.params();
        let (wz, wr, wh) = (tape.param(p, g.w_z), tape.param(p, g.w_r), tape.param(p, g.w_h));
        let (uz, ur, uh) = (tape.param(p, g.u_z), tape.param(p, g.u_r), tape.param(p, g.u_h));
        let (bz, br, bh) = (tape.param(p, g.b_z), tape.param(p, g.b_r), tape.param(p, g.b_h));

        let gate = |tape: &mut Tape<'p>, w, u, b, hidden| -> Result<NodeId, AutodiffError> {
            let xw = tape.matmul(x, w)?;
            let hu = tape.matmul(hidden, u)?;
            let s = tape.add(xw, hu)?;
            tape.add_bias(s, b)
        };
        let z = gate(tape, wz, uz, bz, h)?;
        let z = tape.sigmoid(z);
        let r = gate(tape, wr, ur, br, h)?;
        let r = tape.sigmoid(r);
        let rh = tape.hadamard(r, h)?;
        let cand = gate(tape, wh, uh, bh, rh)?;
        let cand = tape.tanh(cand);
        let keep = tape.one_minus(z);
        let old = tape.hadamard(keep, h)?;
        let new = tape.hadamard(z, cand)?;
        Ok(tape.add(old, new)?)
    }

    /// Runs both encoder directions over a batch of source sequences.
    pub fn encode<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        sources: &[&[usize]],
    ) -> Result<EncoderStates, ModelError> {
        if sources.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        if sources.iter().any(|s| s.is_empty()) {
            return Err(ModelError::EmptySource);
        }
        for s in sources {
            self.check_symbols(s)?;
        }
        let b = sources.len();
        let n = sources.iter().map(|s| s.len()).max().unwrap_or(0);
        let hdim = self.dims().hidden;
        let ids = self.ids();
        let p = self.params();
        let emb = tape.param(p, ids.embedding);

        let mut inputs = Vec::with_capacity(n);
        let mut step_masks = Vec::with_capacity(n);
        for t in 0..n {
            let col: Vec<usize> = sources
                .iter()
                .map(|s| s.get(t).copied().unwrap_or(Vocabulary::PAD))
                .collect();
            inputs.push(tape.gather(emb, &col)?);
            step_masks.push(sources.iter().map(|s| t < s.len()).collect::<Vec<_>>());
        }

        let zero = tape.leaf(Tensor::zeros(&[b, hdim]));
        let mut forward = Vec::with_capacity(n);
        let mut h = zero;
        for x in &inputs {
            // States past a sequence's end are masked out of attention, so
            // the forward direction needs no row selection.
            h = self.gru_step(tape, &ids.enc_fwd, *x, h)?;
            forward.push(h);
        }
        let mut backward = vec![zero; n];
        let mut h = zero;
        for t in (0..n).rev() {
            let next = self.gru_step(tape, &ids.enc_bwd, inputs[t], h)?;
            h = tape.select_rows(&step_masks[t], next, h)?;
            backward[t] = h;
        }

        let att_u = tape.param(p, ids.att_u);
        let mut states = Vec::with_capacity(n);
        let mut projected = Vec::with_capacity(n);
        for t in 0..n {
            let s = tape.concat_cols(&[forward[t], backward[t]])?;
            projected.push(tape.matmul(s, att_u)?);
            states.push(s);
        }
        let init_w = tape.param(p, ids.init_w);
        let init_b = tape.param(p, ids.init_b);
        let pre = tape.matmul(backward[0], init_w)?;
        let pre = tape.add_bias(pre, init_b)?;
        let init = tape.tanh(pre);

        let mut mask = Vec::with_capacity(b * n);
        for s in sources {
            mask.extend((0..n).map(|t| t < s.len()));
        }
        Ok(EncoderStates {
            states,
            projected,
            mask,
            lengths: sources.iter().map(|s| s.len()).collect(),
            init,
        })
    }

    /// Additive attention of a decoder state over the encoder states.
    /// Returns the `[batch × 2·hidden]` context and the weights.
    pub fn attend<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        enc: &EncoderStates,
        state: NodeId,
    ) -> Result<(NodeId, NodeId), ModelError> {
        if enc.positions() == 0 {
            return Err(ModelError::EmptySource);
        }
        let ids = self.ids();
        let att_w = tape.param(self.params(), ids.att_w);
        let att_v = tape.param(self.params(), ids.att_v);
        let ws = tape.matmul(state, att_w)?;
        let mut scores = Vec::with_capacity(enc.positions());
        for &uh in &enc.projected {
            let pre = tape.add(ws, uh)?;
            let act = tape.tanh(pre);
            scores.push(tape.matmul(act, att_v)?);
        }
        let scores = tape.concat_cols(&scores)?;
        let weights = tape.masked_softmax(scores, Some(&enc.mask))?;
        let context = tape.weighted_sum(weights, &enc.states)?;
        Ok((context, weights))
    }

    /// Feeds `[embedding(prev); context]` to the decoder GRU and projects
    /// the new state onto the output alphabet.
    pub fn decode_step<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        enc: &EncoderStates,
        prev: &[usize],
        state: NodeId,
    ) -> Result<StepOutput, ModelError> {
        self.check_symbols(prev)?;
        let ids = self.ids();
        let p = self.params();
        let (context, attention) = self.attend(tape, enc, state)?;
        let emb = tape.param(p, ids.embedding);
        let y = tape.gather(emb, prev)?;
        let x = tape.concat_cols(&[y, context])?;
        let state = self.gru_step(tape, &ids.dec, x, state)?;
        let out_w = tape.param(p, ids.out_w);
        let out_b = tape.param(p, ids.out_b);
        let logits = tape.matmul(state, out_w)?;
        let logits = tape.add_bias(logits, out_b)?;
        let dist = tape.softmax(logits)?;
        Ok(StepOutput {
            dist,
            state,
            attention,
        })
    }

    /// Teacher-forced negative log-likelihood of a padded batch.
    pub fn batch_nll<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        vocab: &Vocabulary,
        batch: &[&EncodedExample],
    ) -> Result<BatchLoss, ModelError> {
        let sources: Vec<&[usize]> = batch.iter().map(|e| e.source.as_slice()).collect();
        let enc = self.encode(tape, &sources)?;
        let inputs: Vec<Vec<usize>> = batch.iter().map(|e| e.decoder_input()).collect();
        let steps = batch.iter().map(|e| e.target.len()).max().unwrap_or(0);
        let mut state = enc.init;
        let mut acc: Option<NodeId> = None;
        for t in 0..steps {
            let mut prev = Vec::with_capacity(batch.len());
            let mut targets = Vec::with_capacity(batch.len());
            let mut weights = Vec::with_capacity(batch.len());
            for (ex, inp) in batch.iter().zip(&inputs) {
                match ex.target.get(t) {
                    Some(&sym) => {
                        prev.push(inp[t]);
                        targets.push(
                            vocab
                                .to_output(sym)
                                .ok_or(ModelError::UnknownTarget(sym))?,
                        );
                        weights.push(1.0);
                    }
                    None => {
                        prev.push(Vocabulary::PAD);
                        targets.push(0);
                        weights.push(0.0);
                    }
                }
            }
            let step = self.decode_step(tape, &enc, &prev, state)?;
            state = step.state;
            let nll = tape.nll(step.dist, &targets, &weights)?;
            acc = Some(match acc {
                Some(a) => tape.add(a, nll)?,
                None => nll,
            });
        }
        let per_example = acc.ok_or(ModelError::EmptyBatch)?;
        let total = tape.sum(per_example);
        Ok(BatchLoss { total, per_example })
    }

    /// Teacher-forced negative log-likelihood of a single example.
    pub fn sequence_nll<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        vocab: &Vocabulary,
        example: &EncodedExample,
    ) -> Result<NodeId, ModelError> {
        Ok(self.batch_nll(tape, vocab, &[example])?.total)
    }

    /// Argmax decoding from BOS until EOS or `max_len` symbols.
    pub fn greedy_decode(
        &self,
        vocab: &Vocabulary,
        source: &[usize],
        max_len: usize,
    ) -> Result<Decoded, ModelError> {
        Ok(self
            .greedy_decode_batch(vocab, &[source], &[max_len])?
            .pop()
            .expect("one result per source"))
    }

    /// Batched greedy decoding; row results equal unbatched decoding.
    pub fn greedy_decode_batch(
        &self,
        vocab: &Vocabulary,
        sources: &[&[usize]],
        max_lens: &[usize],
    ) -> Result<Vec<Decoded>, ModelError> {
        assert_eq!(sources.len(), max_lens.len());
        let mut tape = Tape::new();
        let enc = self.encode(&mut tape, sources)?;
        let b = sources.len();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); b];
        let mut done = vec![false; b];
        let mut truncated = vec![false; b];
        let mut prev = vec![Vocabulary::BOS; b];
        let mut state = enc.init;
        let limit = max_lens.iter().copied().max().unwrap_or(0);
        for step in 0..limit {
            let res = self.decode_step(&mut tape, &enc, &prev, state)?;
            state = res.state;
            let dist = tape.value(res.dist);
            for r in 0..b {
                if done[r] {
                    prev[r] = Vocabulary::PAD;
                    continue;
                }
                if step >= max_lens[r] {
                    done[r] = true;
                    truncated[r] = true;
                    continue;
                }
                let sym = vocab.from_output(argmax(dist.row_slice(r)));
                if sym == Vocabulary::EOS {
                    done[r] = true;
                } else {
                    out[r].push(sym);
                }
                prev[r] = sym;
            }
            if done.iter().all(|&d| d) {
                break;
            }
        }
        Ok(out
            .into_iter()
            .zip(done.into_iter().zip(truncated))
            .map(|(symbols, (done, trunc))| Decoded {
                text: vocab.render(&symbols),
                symbols,
                truncated: trunc || !done,
            })
            .collect())
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
