//! Greedy decoding and the single-sample inference API.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Axis};

use crate::encoding::{EOS, SOS};
use crate::error::{Error, Result};
use crate::nn::{argmax_rows, NodeId, Scalar, Tape};

use super::net::{decoder_step, encode_graph, Bound, Mode, FORBIDDEN_OUTPUTS};
use super::params::ModelParams;

/// Decoder recurrent state: (h, c) per layer, one row each.
#[derive(Debug, Clone)]
pub struct DecoderState<S> {
    pub layers: Vec<(Array1<S>, Array1<S>)>,
}

/// Encoder result for one source sequence.
#[derive(Debug, Clone)]
pub struct EncoderOutput<S> {
    /// One vector of width 2·hidden per source position.
    pub memory: Vec<Array1<S>>,
    /// Decoder initializer derived from the final encoder states.
    pub state: DecoderState<S>,
}

fn validate_ids<S: Scalar>(params: &ModelParams<S>, ids: &[usize]) -> Result<()> {
    for &id in ids {
        if id >= params.vocab_size {
            return Err(Error::IdOutOfRange {
                id,
                size: params.vocab_size,
            });
        }
    }
    Ok(())
}

fn row<S: Scalar>(tape: &Tape<S>, id: NodeId) -> Array1<S> {
    tape.value(id).row(0).to_owned()
}

/// Runs the bidirectional encoder over one source sequence.
pub fn encode<S: Scalar>(params: &ModelParams<S>, source: &[usize]) -> Result<EncoderOutput<S>> {
    if source.is_empty() {
        return Err(Error::EmptyInput("encoding an empty source".into()));
    }
    validate_ids(params, source)?;
    let mut tape = Tape::new();
    let bound = Bound::bind(&mut tape, params);
    let cols: Vec<Vec<usize>> = source.iter().map(|&id| vec![id]).collect();
    let graph = encode_graph(&mut tape, params, &bound, &cols, &mut Mode::Eval);
    Ok(EncoderOutput {
        memory: graph.memory.iter().map(|&m| row(&tape, m)).collect(),
        state: DecoderState {
            layers: graph
                .state
                .iter()
                .map(|&(h, c)| (row(&tape, h), row(&tape, c)))
                .collect(),
        },
    })
}

/// One decoder step over an encoded source. Returns the output
/// distribution over the vocabulary, the advanced state and the
/// attention weights; both distributions are normalized in `f64` and sum
/// to one within 1e-6.
pub fn decode_step<S: Scalar>(
    params: &ModelParams<S>,
    prev_symbol: usize,
    state: &DecoderState<S>,
    memory: &[Array1<S>],
) -> Result<(Vec<f64>, DecoderState<S>, Vec<f64>)> {
    validate_ids(params, &[prev_symbol])?;
    if memory.is_empty() {
        return Err(Error::EmptyInput("decoding with empty memory".into()));
    }
    let mut tape = Tape::new();
    let bound = Bound::bind(&mut tape, params);
    let memory_ids: Vec<NodeId> = memory
        .iter()
        .map(|m| tape.leaf(m.clone().insert_axis(Axis(0))))
        .collect();
    let mut state_ids: Vec<(NodeId, NodeId)> = state
        .layers
        .iter()
        .map(|(h, c)| {
            (
                tape.leaf(h.clone().insert_axis(Axis(0))),
                tape.leaf(c.clone().insert_axis(Axis(0))),
            )
        })
        .collect();
    let out = decoder_step(
        &mut tape,
        params,
        &bound,
        &[prev_symbol],
        &mut state_ids,
        &memory_ids,
        &mut Mode::Eval,
    );
    let distribution = softmax_f64(tape.value(out.logits));
    let alpha = tape
        .attention_weights(out.context)
        .expect("decoder step records attention");
    let attention = normalize_f64(alpha);
    let new_state = DecoderState {
        layers: state_ids
            .iter()
            .map(|&(h, c)| (row(&tape, h), row(&tape, c)))
            .collect(),
    };
    Ok((distribution, new_state, attention))
}

fn softmax_f64<S: Scalar>(logits: &Array2<S>) -> Vec<f64> {
    let row: Vec<f64> = logits.row(0).iter().map(|v| v.as_f64()).collect();
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn normalize_f64<S: Scalar>(weights: &Array2<S>) -> Vec<f64> {
    let row: Vec<f64> = weights.row(0).iter().map(|v| v.as_f64()).collect();
    let total: f64 = row.iter().sum();
    row.into_iter().map(|w| w / total).collect()
}

/// Greedy decode of one source: starts from SOS, emits the argmax symbol
/// each step (never PAD or SEP), stops at EOS; when the budget runs out
/// the final position is forced to EOS, so the output always satisfies
/// the target-sequence shape.
pub fn greedy_decode<S: Scalar>(
    params: &ModelParams<S>,
    source: &[usize],
    max_len: usize,
) -> Result<Vec<usize>> {
    if max_len == 0 {
        return Err(Error::Config("max_len must be ≥ 1".into()));
    }
    let mut out = decode_group(params, &[source.to_vec()], max_len)?;
    Ok(out.pop().expect("one output per source"))
}

/// Batched greedy decode; sources may have arbitrary lengths (decoding
/// runs in equal-length groups) and each gets a budget of its source
/// length plus 16 symbols.
pub fn greedy_decode_batch<S: Scalar>(
    params: &ModelParams<S>,
    sources: &[Vec<usize>],
) -> Result<Vec<Vec<usize>>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, src) in sources.iter().enumerate() {
        groups.entry(src.len()).or_default().push(i);
    }
    let mut results: Vec<Vec<usize>> = vec![Vec::new(); sources.len()];
    for (len, indices) in groups {
        let group: Vec<Vec<usize>> = indices.iter().map(|&i| sources[i].clone()).collect();
        let decoded = decode_group(params, &group, len + 16)?;
        for (i, out) in indices.into_iter().zip(decoded) {
            results[i] = out;
        }
    }
    Ok(results)
}

fn decode_group<S: Scalar>(
    params: &ModelParams<S>,
    sources: &[Vec<usize>],
    max_len: usize,
) -> Result<Vec<Vec<usize>>> {
    let batch = sources.len();
    let src_len = sources[0].len();
    if src_len == 0 {
        return Err(Error::EmptyInput("decoding an empty source".into()));
    }
    for src in sources {
        validate_ids(params, src)?;
    }
    let mut cols = vec![vec![0usize; batch]; src_len];
    for (b, src) in sources.iter().enumerate() {
        for (p, &id) in src.iter().enumerate() {
            cols[p][b] = id;
        }
    }
    let mut tape = Tape::new();
    let bound = Bound::bind(&mut tape, params);
    let graph = encode_graph(&mut tape, params, &bound, &cols, &mut Mode::Eval);
    let mut state = graph.state;
    let mut outputs: Vec<Vec<usize>> = vec![vec![SOS]; batch];
    let mut done = vec![false; batch];
    let mut prev = vec![SOS; batch];
    for t in 1..=max_len {
        let out = decoder_step(
            &mut tape,
            params,
            &bound,
            &prev,
            &mut state,
            &graph.memory,
            &mut Mode::Eval,
        );
        let choices = argmax_rows(tape.value(out.logits), &FORBIDDEN_OUTPUTS);
        for b in 0..batch {
            if done[b] {
                continue;
            }
            let symbol = if t == max_len { EOS } else { choices[b] };
            outputs[b].push(symbol);
            if symbol == EOS {
                done[b] = true;
            }
        }
        if done.iter().all(|&d| d) {
            break;
        }
        prev = (0..batch)
            .map(|b| if done[b] { EOS } else { choices[b] })
            .collect();
    }
    Ok(outputs)
}
