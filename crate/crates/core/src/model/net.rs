//! Tape graph builders for the encoder-decoder network.
//!
//! The encoder is a stacked bidirectional LSTM; the top layer's
//! concatenated states form the attention memory and the per-layer final
//! states are projected into the decoder's initial state. The decoder is
//! a stacked unidirectional LSTM whose top state queries the memory by a
//! learned bilinear score; the attentional vector feeds a tanh combine
//! layer whose output is scored against the (shared) embedding matrix.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::encoding::{EncodedPair, PAD, SEP};
use crate::error::{Error, Result};
use crate::nn::{argmax_rows, NodeId, Scalar, Tape};

use super::params::{LstmIdx, ModelParams};

/// Ids that greedy choices never emit.
pub(crate) const FORBIDDEN_OUTPUTS: [usize; 2] = [PAD, SEP];

/// Node ids of every parameter tensor bound onto a tape, parallel to
/// `ModelParams::tensors`.
pub(crate) struct Bound {
    ids: Vec<NodeId>,
}

impl Bound {
    pub fn bind<S: Scalar>(tape: &mut Tape<S>, params: &ModelParams<S>) -> Self {
        let ids = params
            .tensors()
            .iter()
            .map(|t| tape.leaf_shared(t.clone()))
            .collect();
        Self { ids }
    }

    pub fn id(&self, index: usize) -> NodeId {
        self.ids[index]
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }
}

/// Forward-pass regime: evaluation (deterministic, full teacher forcing)
/// or training (dropout active, teacher-forcing coin flips).
pub(crate) enum Mode<'a> {
    Eval,
    Train {
        dropout: f64,
        rng: &'a mut ChaCha8Rng,
    },
}

fn apply_dropout<S: Scalar>(tape: &mut Tape<S>, x: NodeId, mode: &mut Mode) -> NodeId {
    match mode {
        Mode::Train { dropout, rng } if *dropout > 0.0 => {
            let keep = 1.0 - *dropout;
            let scale = S::from_f64(1.0 / keep);
            let dim = tape.value(x).raw_dim();
            let mask = Array2::from_shape_fn(dim, |_| {
                if rng.gen::<f64>() < keep {
                    scale
                } else {
                    S::zero()
                }
            });
            let mask = tape.leaf(mask);
            tape.mul(x, mask)
        }
        _ => x,
    }
}

fn lstm_cell<S: Scalar>(
    tape: &mut Tape<S>,
    x: NodeId,
    h: NodeId,
    c: NodeId,
    w: (NodeId, NodeId, NodeId),
    hidden: usize,
) -> (NodeId, NodeId) {
    let (w_x, w_h, bias) = w;
    let zx = tape.linear(x, w_x);
    let zh = tape.linear(h, w_h);
    let z = tape.add(zx, zh);
    let z = tape.add_row(z, bias);
    // Gate order: input, forget, cell, output.
    let i = tape.slice_cols(z, 0, hidden);
    let i = tape.sigmoid(i);
    let f = tape.slice_cols(z, hidden, hidden);
    let f = tape.sigmoid(f);
    let g = tape.slice_cols(z, 2 * hidden, hidden);
    let g = tape.tanh(g);
    let o = tape.slice_cols(z, 3 * hidden, hidden);
    let o = tape.sigmoid(o);
    let fc = tape.mul(f, c);
    let ig = tape.mul(i, g);
    let c_new = tape.add(fc, ig);
    let ct = tape.tanh(c_new);
    let h_new = tape.mul(o, ct);
    (h_new, c_new)
}

fn bound_lstm(bound: &Bound, idx: &LstmIdx) -> (NodeId, NodeId, NodeId) {
    (bound.id(idx.w_x), bound.id(idx.w_h), bound.id(idx.bias))
}

/// Encoder output on the tape.
pub(crate) struct EncGraph {
    /// Top-layer memory: one (batch, 2·hidden) node per source position.
    pub memory: Vec<NodeId>,
    /// Initial decoder (h, c) per layer.
    pub state: Vec<(NodeId, NodeId)>,
}

/// Runs the bidirectional encoder over a batch of equal-length sources
/// given as columns (`src_cols[p][b]` = id at position p of row b).
pub(crate) fn encode_graph<S: Scalar>(
    tape: &mut Tape<S>,
    params: &ModelParams<S>,
    bound: &Bound,
    src_cols: &[Vec<usize>],
    mode: &mut Mode,
) -> EncGraph {
    let hidden = params.arch.hidden_size;
    let batch = src_cols[0].len();
    let emb = bound.id(params.layout.embedding);
    let mut inputs: Vec<NodeId> = src_cols.iter().map(|ids| tape.rows(emb, ids)).collect();

    let mut state = Vec::with_capacity(params.layout.enc.len());
    let mut memory: Vec<NodeId> = Vec::new();
    for (l, (fwd, bwd)) in params.layout.enc.iter().enumerate() {
        if l > 0 {
            let mut dropped = Vec::with_capacity(inputs.len());
            for &x in &inputs {
                dropped.push(apply_dropout(tape, x, mode));
            }
            inputs = dropped;
        }
        let zeros = tape.leaf(Array2::zeros((batch, hidden)));

        let fwd_w = bound_lstm(bound, fwd);
        let (mut hf, mut cf) = (zeros, zeros);
        let mut fwd_h = Vec::with_capacity(inputs.len());
        for &x in &inputs {
            let (h2, c2) = lstm_cell(tape, x, hf, cf, fwd_w, hidden);
            hf = h2;
            cf = c2;
            fwd_h.push(hf);
        }

        let bwd_w = bound_lstm(bound, bwd);
        let (mut hb, mut cb) = (zeros, zeros);
        let mut bwd_h = Vec::with_capacity(inputs.len());
        for &x in inputs.iter().rev() {
            let (h2, c2) = lstm_cell(tape, x, hb, cb, bwd_w, hidden);
            hb = h2;
            cb = c2;
            bwd_h.push(hb);
        }
        bwd_h.reverse();

        memory = fwd_h
            .iter()
            .zip(&bwd_h)
            .map(|(&f, &b)| tape.concat_cols(f, b))
            .collect();
        inputs = memory.clone();

        // Decoder initializer: project [last forward; first backward].
        let cat_h = tape.concat_cols(hf, hb);
        let (wi, bi) = params.layout.init_h[l];
        let h0 = tape.linear(cat_h, bound.id(wi));
        let h0 = tape.add_row(h0, bound.id(bi));
        let h0 = tape.tanh(h0);
        let cat_c = tape.concat_cols(cf, cb);
        let (wc, bc) = params.layout.init_c[l];
        let c0 = tape.linear(cat_c, bound.id(wc));
        let c0 = tape.add_row(c0, bound.id(bc));
        let c0 = tape.tanh(c0);
        state.push((h0, c0));
    }
    EncGraph { memory, state }
}

pub(crate) struct StepOut {
    pub logits: NodeId,
    /// The attend node; its weights are readable via
    /// `Tape::attention_weights`.
    pub context: NodeId,
}

/// One decoder step: embeds the previous symbols, advances the LSTM
/// stack, attends over the memory and produces output logits through the
/// tied embedding.
pub(crate) fn decoder_step<S: Scalar>(
    tape: &mut Tape<S>,
    params: &ModelParams<S>,
    bound: &Bound,
    prev_ids: &[usize],
    state: &mut [(NodeId, NodeId)],
    memory: &[NodeId],
    mode: &mut Mode,
) -> StepOut {
    let hidden = params.arch.hidden_size;
    let emb = bound.id(params.layout.embedding);
    let mut x = tape.rows(emb, prev_ids);
    let layers = params.layout.dec.len();
    let mut top = x;
    for (l, idx) in params.layout.dec.iter().enumerate() {
        let w = bound_lstm(bound, idx);
        let (hp, cp) = state[l];
        let (hn, cn) = lstm_cell(tape, x, hp, cp, w, hidden);
        state[l] = (hn, cn);
        top = hn;
        if l + 1 < layers {
            x = apply_dropout(tape, hn, mode);
        }
    }
    let query = tape.linear(top, bound.id(params.layout.attn_w));
    let context = tape.attend(memory, query);
    let cat = tape.concat_cols(top, context);
    let cat = apply_dropout(tape, cat, mode);
    // No squashing here: the tied embedding cannot grow freely (it is
    // also the input embedding), so the pre-logit vector must.
    let p = tape.linear(cat, bound.id(params.layout.combine_w));
    let p = tape.add_row(p, bound.id(params.layout.combine_b));
    let logits = tape.linear(p, emb);
    let logits = tape.add_row(logits, bound.id(params.layout.out_bias));
    StepOut { logits, context }
}

/// A training batch: sources of one shared length, targets padded with
/// PAD, both stored column-wise.
pub(crate) struct Batch {
    pub src_cols: Vec<Vec<usize>>,
    pub tgt_cols: Vec<Vec<usize>>,
}

impl Batch {
    pub fn new(pairs: &[&EncodedPair], vocab_size: usize) -> Result<Self> {
        let src_len = pairs[0].source.len();
        let tgt_len = pairs.iter().map(|p| p.target.len()).max().unwrap_or(0);
        let mut src_cols = vec![vec![0usize; pairs.len()]; src_len];
        let mut tgt_cols = vec![vec![PAD; pairs.len()]; tgt_len];
        for (b, pair) in pairs.iter().enumerate() {
            if pair.source.len() != src_len {
                return Err(Error::Config(
                    "batch requires equal-length sources".into(),
                ));
            }
            for &id in pair.source.iter().chain(&pair.target) {
                if id >= vocab_size {
                    return Err(Error::IdOutOfRange {
                        id,
                        size: vocab_size,
                    });
                }
            }
            for (p, &id) in pair.source.iter().enumerate() {
                src_cols[p][b] = id;
            }
            for (p, &id) in pair.target.iter().enumerate() {
                tgt_cols[p][b] = id;
            }
        }
        Ok(Self { src_cols, tgt_cols })
    }

    /// Non-PAD target positions, i.e. the loss normalizer.
    pub fn token_count(&self) -> usize {
        self.tgt_cols
            .iter()
            .skip(1)
            .flat_map(|col| col.iter())
            .filter(|&&id| id != PAD)
            .count()
    }
}

pub(crate) struct LossGraph {
    /// Summed cross-entropy over all non-PAD target positions, shape (1, 1).
    pub loss_sum: NodeId,
    /// Number of positions contributing to the sum.
    pub token_count: usize,
}

/// Builds the teacher-forced training loss for one batch. In training
/// mode each step after the first feeds the gold previous symbol with
/// probability `teacher_forcing_prob` (one coin per step) and the model's
/// own argmax otherwise; in eval mode the gold symbol is always fed.
pub(crate) fn loss_graph<S: Scalar>(
    tape: &mut Tape<S>,
    params: &ModelParams<S>,
    bound: &Bound,
    batch: &Batch,
    teacher_forcing_prob: f64,
    mode: &mut Mode,
) -> LossGraph {
    let graph = encode_graph(tape, params, bound, &batch.src_cols, mode);
    let mut state = graph.state;
    let steps = batch.tgt_cols.len() - 1;
    let mut prev_logits: Option<NodeId> = None;
    let mut total: Option<NodeId> = None;
    let mut token_count = 0;
    for t in 0..steps {
        // Independent coin per sequence and step: ground truth with
        // probability `teacher_forcing_prob`, the model's own argmax
        // otherwise. Step 0 always starts from SOS; eval always forces.
        let prev_ids: Vec<usize> = match (&mut *mode, prev_logits) {
            (Mode::Train { rng, .. }, Some(logits)) if t > 0 => {
                let own = argmax_rows(tape.value(logits), &FORBIDDEN_OUTPUTS);
                batch.tgt_cols[t]
                    .iter()
                    .zip(own)
                    .map(|(&truth, model)| {
                        if rng.gen::<f64>() < teacher_forcing_prob {
                            truth
                        } else {
                            model
                        }
                    })
                    .collect()
            }
            _ => batch.tgt_cols[t].clone(),
        };
        let out = decoder_step(
            tape,
            params,
            bound,
            &prev_ids,
            &mut state,
            &graph.memory,
            mode,
        );
        let targets = &batch.tgt_cols[t + 1];
        let mask: Vec<bool> = targets.iter().map(|&id| id != PAD).collect();
        token_count += mask.iter().filter(|&&m| m).count();
        let ce = tape.cross_entropy_sum(out.logits, targets, &mask);
        total = Some(match total {
            None => ce,
            Some(acc) => tape.add(acc, ce),
        });
        prev_logits = Some(out.logits);
    }
    LossGraph {
        loss_sum: total.expect("target sequences have at least SOS and EOS"),
        token_count,
    }
}
