//! Teacher-forced training with Adam, dev-accuracy model selection and
//! early stopping.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::EncodedPair;
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, Adam, Scalar, Tape};

use super::decode::greedy_decode_batch;
use super::net::{loss_graph, Batch, Bound, Mode};
use super::params::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub teacher_forcing_prob: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Consecutive epochs without dev improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub grad_clip: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            teacher_forcing_prob: 0.5,
            batch_size: 64,
            max_epochs: 60,
            patience: 5,
            seed: 0,
            grad_clip: 5.0,
        }
    }
}

impl TrainSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be finite and ≥ 0".into()));
        }
        if !(0.0..=1.0).contains(&self.teacher_forcing_prob) {
            return Err(Error::Config(
                "teacher_forcing_prob must be in [0, 1]".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be ≥ 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_accuracy: f64,
}

/// Groups pair indices by source length; batches never mix lengths, so
/// sources need no padding (targets are padded and masked).
fn make_batches<'a>(
    pairs: &'a [EncodedPair],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<&'a EncodedPair>> {
    let mut groups: BTreeMap<usize, Vec<&EncodedPair>> = BTreeMap::new();
    for pair in pairs {
        groups.entry(pair.source.len()).or_default().push(pair);
    }
    let mut batches = Vec::new();
    for group in groups.values_mut() {
        shuffle(group, rng);
        for chunk in group.chunks(batch_size) {
            batches.push(chunk.to_vec());
        }
    }
    shuffle(&mut batches, rng);
    batches
}

fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// Mean cross-entropy over the non-PAD target positions of `batch`.
///
/// In training mode, teacher forcing and dropout draw from a stream
/// seeded by `settings.seed`; with `teacher_forcing_prob = 1` and zero
/// dropout (or in eval mode) the value is deterministic.
pub fn loss<S: Scalar>(
    params: &ModelParams<S>,
    batch: &[EncodedPair],
    settings: &TrainSettings,
    training: bool,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("loss over an empty batch".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut total = 0.0;
    let mut tokens = 0usize;
    let mut groups: BTreeMap<usize, Vec<&EncodedPair>> = BTreeMap::new();
    for pair in batch {
        groups.entry(pair.source.len()).or_default().push(pair);
    }
    for group in groups.values() {
        let b = Batch::new(group, params.vocab_size)?;
        let mut tape = Tape::new();
        let bound = Bound::bind(&mut tape, params);
        let mut mode = if training {
            Mode::Train {
                dropout: params.arch.dropout,
                rng: &mut rng,
            }
        } else {
            Mode::Eval
        };
        let lg = loss_graph(
            &mut tape,
            params,
            &bound,
            &b,
            settings.teacher_forcing_prob,
            &mut mode,
        );
        total += tape.scalar(lg.loss_sum).as_f64();
        tokens += lg.token_count;
    }
    Ok(total / tokens as f64)
}

/// Summed loss, token count and parameter gradients for one batch; the
/// gradients are of the *mean* per-token loss (backward is seeded with
/// `grad_scale / token_count`).
pub(crate) fn batch_gradients<S: Scalar>(
    params: &ModelParams<S>,
    batch: &Batch,
    teacher_forcing_prob: f64,
    mode: &mut Mode,
    grad_scale: f64,
) -> (f64, usize, Vec<Array2<S>>) {
    let mut tape = Tape::new();
    let bound = Bound::bind(&mut tape, params);
    let lg = loss_graph(&mut tape, params, &bound, batch, teacher_forcing_prob, mode);
    let loss_sum = tape.scalar(lg.loss_sum).as_f64();
    let seed = S::from_f64(grad_scale / lg.token_count.max(1) as f64);
    let mut grads = tape.backward(lg.loss_sum, seed);
    let collected = bound
        .ids()
        .iter()
        .zip(params.tensors())
        .map(|(&id, tensor)| grads.take_or_zeros(id, tensor.dim()))
        .collect();
    (loss_sum, lg.token_count, collected)
}

fn dev_exact_match<S: Scalar>(params: &ModelParams<S>, dev: &[EncodedPair]) -> Result<f64> {
    let sources: Vec<Vec<usize>> = dev.iter().map(|p| p.source.clone()).collect();
    let decoded = greedy_decode_batch(params, &sources)?;
    let hits = decoded
        .iter()
        .zip(dev)
        .filter(|(got, pair)| *got == &pair.target)
        .count();
    Ok(hits as f64 / dev.len() as f64)
}

/// Trains with Adam, evaluating dev exact-match accuracy each epoch.
/// Returns the best-dev parameters (the final ones when dev is empty)
/// and the per-epoch history. Identical inputs and seed reproduce the
/// identical history.
pub fn train_epochs<S: Scalar>(
    params: ModelParams<S>,
    train: &[EncodedPair],
    dev: &[EncodedPair],
    settings: &TrainSettings,
) -> Result<(ModelParams<S>, Vec<EpochStats>)> {
    settings.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput("training set is empty".into()));
    }
    let mut params = params;
    let mut optimizer = Adam::new(settings.learning_rate, params.tensors());
    let mut history = Vec::new();
    let mut best: Option<(f64, ModelParams<S>)> = None;
    let mut stale_epochs = 0usize;

    for epoch in 1..=settings.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(
            settings
                .seed
                .wrapping_add((epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let mut loss_total = 0.0;
        let mut token_total = 0usize;
        for chunk in make_batches(train, settings.batch_size, &mut rng) {
            let batch = Batch::new(&chunk, params.vocab_size)?;
            let mut mode = Mode::Train {
                dropout: params.arch.dropout,
                rng: &mut rng,
            };
            let (loss_sum, tokens, mut grads) = batch_gradients(
                &params,
                &batch,
                settings.teacher_forcing_prob,
                &mut mode,
                1.0,
            );
            if !loss_sum.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    msg: format!("non-finite loss {loss_sum}"),
                });
            }
            if settings.grad_clip > 0.0 && settings.grad_clip.is_finite() {
                clip_global_norm(&mut grads, settings.grad_clip);
            }
            optimizer.step(params.tensors_mut(), &grads);
            if !params.all_finite() {
                return Err(Error::Diverged {
                    epoch,
                    msg: "non-finite parameter after optimizer step".into(),
                });
            }
            loss_total += loss_sum;
            token_total += tokens;
        }
        let train_loss = loss_total / token_total.max(1) as f64;
        let dev_accuracy = if dev.is_empty() {
            0.0
        } else {
            dev_exact_match(&params, dev)?
        };
        history.push(EpochStats {
            epoch,
            train_loss,
            dev_accuracy,
        });
        if dev.is_empty() {
            continue;
        }
        // Ties keep the later model (more training behind it); patience
        // counts only epochs without strict improvement.
        let strictly_improved = best
            .as_ref()
            .map(|(acc, _)| dev_accuracy > *acc)
            .unwrap_or(true);
        let tied = best
            .as_ref()
            .map(|(acc, _)| dev_accuracy == *acc)
            .unwrap_or(false);
        if strictly_improved || tied {
            best = Some((dev_accuracy, params.clone()));
        }
        if strictly_improved {
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= settings.patience && settings.patience > 0 {
                break;
            }
        }
    }
    let final_params = match best {
        Some((_, snapshot)) => snapshot,
        None => params,
    };
    Ok((final_params, history))
}
