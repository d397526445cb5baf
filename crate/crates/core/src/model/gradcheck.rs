//! Finite-difference verification of the analytic gradients.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoding::EncodedPair;
use crate::error::{Error, Result};
use crate::nn::{Scalar, Tape};

use super::net::{loss_graph, Batch, Bound, Mode};
use super::params::ModelParams;
use super::train::batch_gradients;

/// Relative error with both-near-zero values auto-passing: below the
/// finite-difference noise floor the comparison carries no information.
fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs());
    if denom <= 1e-6 {
        0.0
    } else {
        (analytic - numeric).abs() / denom
    }
}

fn mean_loss<S: Scalar>(params: &ModelParams<S>, groups: &[Batch]) -> f64 {
    let mut total = 0.0;
    let mut tokens = 0usize;
    for batch in groups {
        let mut tape = Tape::new();
        let bound = Bound::bind(&mut tape, params);
        let lg = loss_graph(&mut tape, params, &bound, batch, 1.0, &mut Mode::Eval);
        total += tape.scalar(lg.loss_sum).as_f64();
        tokens += lg.token_count;
    }
    total / tokens as f64
}

/// Compares analytic gradients of the deterministic (eval-mode, fully
/// teacher-forced, dropout-free) mean loss against central finite
/// differences on `n_samples` randomly chosen parameters. Returns the
/// maximum relative error. Run at `f64` precision for a meaningful bound.
pub fn grad_check<S: Scalar>(
    params: &ModelParams<S>,
    batch: &[EncodedPair],
    epsilon: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("gradient check over an empty batch".into()));
    }
    if n_samples == 0 {
        return Err(Error::Config("gradient check needs a non-empty subset".into()));
    }
    let mut by_len: BTreeMap<usize, Vec<&EncodedPair>> = BTreeMap::new();
    for pair in batch {
        by_len.entry(pair.source.len()).or_default().push(pair);
    }
    let groups: Vec<Batch> = by_len
        .values()
        .map(|g| Batch::new(g, params.vocab_size))
        .collect::<Result<_>>()?;

    // Analytic gradients of the mean loss, accumulated over groups.
    let total_tokens: usize = groups.iter().map(Batch::token_count).sum();
    let mut analytic: Vec<Array2<S>> = params
        .tensors()
        .iter()
        .map(|t| Array2::zeros(t.raw_dim()))
        .collect();
    for group in &groups {
        let (_, count, grads) = batch_gradients(params, group, 1.0, &mut Mode::Eval, 1.0);
        let weight = S::from_f64(count as f64 / total_tokens as f64);
        for (acc, g) in analytic.iter_mut().zip(grads) {
            *acc = &*acc + &(&g * weight);
        }
    }
    let flat_analytic: Vec<f64> = analytic
        .iter()
        .flat_map(|t| t.iter().map(|v| v.as_f64()))
        .collect();

    let n_params = params.num_scalars();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: BTreeSet<usize> = BTreeSet::new();
    if n_samples >= n_params {
        indices.extend(0..n_params);
    } else {
        while indices.len() < n_samples {
            indices.insert(rng.gen_range(0..n_params));
        }
    }

    let mut probe = params.clone();
    let mut max_err = 0.0f64;
    for index in indices {
        let original = probe.get_flat(index);
        probe.set_flat(index, original + S::from_f64(epsilon));
        let plus = mean_loss(&probe, &groups);
        probe.set_flat(index, original - S::from_f64(epsilon));
        let minus = mean_loss(&probe, &groups);
        probe.set_flat(index, original);
        let numeric = (plus - minus) / (2.0 * epsilon);
        max_err = max_err.max(relative_error(flat_analytic[index], numeric));
    }
    Ok(max_err)
}
