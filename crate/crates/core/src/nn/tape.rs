//! Reverse-mode automatic differentiation over batched 2-D arrays.
//!
//! A [`Tape`] records a computation as a flat list of nodes; every node
//! value has shape `(batch, features)`. [`Tape::backward`] walks the list
//! in reverse and accumulates gradients. The op set is exactly what an
//! LSTM encoder-decoder with attention and a tied-embedding output layer
//! needs; nothing here knows about the model itself.

use std::sync::Arc;

use ndarray::{concatenate, s, Array2, Axis};

use super::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op<S> {
    Leaf,
    /// `x · wᵀ` with `w` stored as (out, in).
    Linear { x: NodeId, w: NodeId },
    /// Broadcast row add; `b` has shape (1, n).
    AddRow { x: NodeId, b: NodeId },
    Add { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Sigmoid { x: NodeId },
    Tanh { x: NodeId },
    ConcatCols { a: NodeId, b: NodeId },
    SliceCols { x: NodeId, start: usize },
    /// Embedding row gather: row b of the value is `table[ids[b]]`.
    Rows { table: NodeId, ids: Vec<usize> },
    /// Dot-product attention over `memory`; value is the context vector.
    Attend {
        memory: Vec<NodeId>,
        query: NodeId,
        alpha: Array2<S>,
    },
    /// Summed token cross-entropy over the masked rows of `logits`.
    CrossEntropy {
        logits: NodeId,
        targets: Vec<usize>,
        mask: Vec<bool>,
        probs: Array2<S>,
    },
    SumAll { x: NodeId },
}

struct Node<S> {
    value: Arc<Array2<S>>,
    op: Op<S>,
}

pub struct Tape<S> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    fn push(&mut self, value: Array2<S>, op: Op<S>) -> NodeId {
        self.push_arc(Arc::new(value), op)
    }

    fn push_arc(&mut self, value: Arc<Array2<S>>, op: Op<S>) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Array2<S> {
        &self.nodes[id.0].value
    }

    /// Constant input; receives no gradient of its own but participates
    /// in the backward pass of its consumers.
    pub fn leaf(&mut self, value: Array2<S>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// Shared-ownership leaf: used to bind model parameters without
    /// copying them.
    pub fn leaf_shared(&mut self, value: Arc<Array2<S>>) -> NodeId {
        self.push_arc(value, Op::Leaf)
    }

    pub fn linear(&mut self, x: NodeId, w: NodeId) -> NodeId {
        let value = self.value(x).dot(&self.value(w).t());
        self.push(value, Op::Linear { x, w })
    }

    pub fn add_row(&mut self, x: NodeId, b: NodeId) -> NodeId {
        debug_assert_eq!(self.value(b).nrows(), 1);
        let value = self.value(x) + self.value(b);
        self.push(value, Op::AddRow { x, b })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.value(a) + self.value(b);
        self.push(value, Op::Add { a, b })
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.value(a) * self.value(b);
        self.push(value, Op::Mul { a, b })
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let one = S::one();
        let value = self.value(x).mapv(|v| one / (one + (-v).exp()));
        self.push(value, Op::Sigmoid { x })
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).mapv(|v| v.tanh());
        self.push(value, Op::Tanh { x })
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = concatenate![Axis(1), self.value(a).view(), self.value(b).view()];
        self.push(value, Op::ConcatCols { a, b })
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        let value = self.value(x).slice(s![.., start..start + len]).to_owned();
        self.push(value, Op::SliceCols { x, start })
    }

    pub fn rows(&mut self, table: NodeId, ids: &[usize]) -> NodeId {
        let t = self.value(table);
        let mut value = Array2::zeros((ids.len(), t.ncols()));
        for (row, &id) in ids.iter().enumerate() {
            value.row_mut(row).assign(&t.row(id));
        }
        self.push(
            value,
            Op::Rows {
                table,
                ids: ids.to_vec(),
            },
        )
    }

    /// Attention step: scores each memory position against `query` by a
    /// 1/√width-scaled dot product, softmax-normalizes per row, and
    /// returns the weighted sum of memory vectors. The weights are
    /// retrievable afterwards via [`Tape::attention_weights`].
    ///
    /// Normalization runs in `f64` regardless of `S`; the cast back keeps
    /// each row summing to one within a few ulps.
    pub fn attend(&mut self, memory: &[NodeId], query: NodeId) -> NodeId {
        let batch = self.value(query).nrows();
        let width = self.value(query).ncols();
        let len = memory.len();
        let scale = S::from_f64(1.0 / (width as f64).sqrt());
        let mut scores = Array2::<S>::zeros((batch, len));
        for (i, &m) in memory.iter().enumerate() {
            let col = (self.value(query) * self.value(m)).sum_axis(Axis(1));
            scores.column_mut(i).assign(&(col * scale));
        }
        let mut alpha = Array2::<S>::zeros((batch, len));
        for b in 0..batch {
            let row: Vec<f64> = scores.row(b).iter().map(|v| v.as_f64()).collect();
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            for (i, e) in exps.iter().enumerate() {
                alpha[[b, i]] = S::from_f64(e / total);
            }
        }
        let mut ctx = Array2::<S>::zeros((batch, width));
        for (i, &m) in memory.iter().enumerate() {
            let weights = alpha.column(i).insert_axis(Axis(1));
            ctx = ctx + self.value(m) * &weights;
        }
        self.push(
            ctx,
            Op::Attend {
                memory: memory.to_vec(),
                query,
                alpha,
            },
        )
    }

    /// Attention weights recorded by an [`Tape::attend`] node.
    pub fn attention_weights(&self, id: NodeId) -> Option<&Array2<S>> {
        match &self.nodes[id.0].op {
            Op::Attend { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Summed cross-entropy of `targets` under row-wise softmax of
    /// `logits`, counting only rows with a true mask. Value has shape
    /// (1, 1); divide by the mask count for a mean.
    pub fn cross_entropy_sum(&mut self, logits: NodeId, targets: &[usize], mask: &[bool]) -> NodeId {
        let z = self.value(logits);
        debug_assert_eq!(z.nrows(), targets.len());
        debug_assert_eq!(z.nrows(), mask.len());
        let mut probs = Array2::<S>::zeros(z.raw_dim());
        let mut total = S::zero();
        for (b, row) in z.rows().into_iter().enumerate() {
            let max = row.iter().cloned().fold(S::neg_infinity(), S::max);
            let mut lse = S::zero();
            for v in row.iter() {
                lse = lse + (*v - max).exp();
            }
            let log_norm = max + lse.ln();
            for (i, v) in row.iter().enumerate() {
                probs[[b, i]] = (*v - log_norm).exp();
            }
            if mask[b] {
                total = total + (log_norm - row[targets[b]]);
            }
        }
        self.push(
            Array2::from_elem((1, 1), total),
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                mask: mask.to_vec(),
                probs,
            },
        )
    }

    pub fn sum_all(&mut self, x: NodeId) -> NodeId {
        let total = self.value(x).iter().cloned().fold(S::zero(), |a, b| a + b);
        self.push(Array2::from_elem((1, 1), total), Op::SumAll { x })
    }

    /// Scalar value of a (1, 1) node.
    pub fn scalar(&self, id: NodeId) -> S {
        let v = self.value(id);
        debug_assert_eq!(v.dim(), (1, 1));
        v[[0, 0]]
    }

    /// Reverse pass from `root` (a (1, 1) node), seeding its gradient
    /// with `seed`. Returns one gradient slot per node; leaves that never
    /// influenced the root stay `None`.
    pub fn backward(&self, root: NodeId, seed: S) -> Gradients<S> {
        let mut grads: Vec<Option<Array2<S>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Array2::from_elem((1, 1), seed));
        for idx in (0..=root.0).rev() {
            // Leaves keep their gradient so callers can read it out.
            if matches!(self.nodes[idx].op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            match &self.nodes[idx].op {
                Op::Leaf => unreachable!(),
                Op::Linear { x, w } => {
                    let dx = g.dot(self.value(*w));
                    let dw = g.t().dot(self.value(*x));
                    accumulate(&mut grads, *x, dx);
                    accumulate(&mut grads, *w, dw);
                }
                Op::AddRow { x, b } => {
                    let db = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    accumulate(&mut grads, *b, db);
                    accumulate(&mut grads, *x, g.clone());
                }
                Op::Add { a, b } => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g.clone());
                }
                Op::Mul { a, b } => {
                    let da = &g * self.value(*b);
                    let db = &g * self.value(*a);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::Sigmoid { x } => {
                    let y = &self.nodes[idx].value;
                    let one = S::one();
                    let dx = &g * &y.mapv(|v| v * (one - v));
                    accumulate(&mut grads, *x, dx);
                }
                Op::Tanh { x } => {
                    let y = &self.nodes[idx].value;
                    let one = S::one();
                    let dx = &g * &y.mapv(|v| one - v * v);
                    accumulate(&mut grads, *x, dx);
                }
                Op::ConcatCols { a, b } => {
                    let na = self.value(*a).ncols();
                    accumulate(&mut grads, *a, g.slice(s![.., ..na]).to_owned());
                    accumulate(&mut grads, *b, g.slice(s![.., na..]).to_owned());
                }
                Op::SliceCols { x, start } => {
                    let mut dx = Array2::zeros(self.value(*x).raw_dim());
                    dx.slice_mut(s![.., *start..*start + g.ncols()])
                        .assign(&g);
                    accumulate(&mut grads, *x, dx);
                }
                Op::Rows { table, ids } => {
                    let mut dt = Array2::zeros(self.value(*table).raw_dim());
                    for (row, &id) in ids.iter().enumerate() {
                        let target = dt.row_mut(id);
                        ndarray::Zip::from(target)
                            .and(g.row(row))
                            .for_each(|t, &v| *t = *t + v);
                    }
                    accumulate(&mut grads, *table, dt);
                }
                Op::Attend {
                    memory,
                    query,
                    alpha,
                } => {
                    let q = self.value(*query);
                    let batch = q.nrows();
                    let len = memory.len();
                    let scale = S::from_f64(1.0 / (q.ncols() as f64).sqrt());
                    // dα_bi = g_b · mem_i_b
                    let mut dalpha = Array2::<S>::zeros((batch, len));
                    for (i, &m) in memory.iter().enumerate() {
                        let col = (&g * self.value(m)).sum_axis(Axis(1));
                        dalpha.column_mut(i).assign(&col);
                    }
                    // Softmax backward, then through the scaled dot:
                    // ds = α ∘ (dα − Σ_j α_j dα_j), dscore→du/dm carry 1/√w.
                    let inner = (alpha * &dalpha).sum_axis(Axis(1)).insert_axis(Axis(1));
                    let ds = (alpha * &(&dalpha - &inner)).mapv(|v| v * scale);
                    let mut dquery = Array2::<S>::zeros(q.raw_dim());
                    for (i, &m) in memory.iter().enumerate() {
                        let ds_col = ds.column(i).insert_axis(Axis(1));
                        dquery = dquery + self.value(m) * &ds_col;
                        let a_col = alpha.column(i).insert_axis(Axis(1));
                        let dm = &g * &a_col + q * &ds_col;
                        accumulate(&mut grads, m, dm);
                    }
                    accumulate(&mut grads, *query, dquery);
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    mask,
                    probs,
                } => {
                    let scale = g[[0, 0]];
                    let mut dz = Array2::<S>::zeros(probs.raw_dim());
                    for b in 0..targets.len() {
                        if !mask[b] {
                            continue;
                        }
                        let mut row = dz.row_mut(b);
                        row.assign(&probs.row(b));
                        row[targets[b]] = row[targets[b]] - S::one();
                        row.mapv_inplace(|v| v * scale);
                    }
                    accumulate(&mut grads, *logits, dz);
                }
                Op::SumAll { x } => {
                    let dx = Array2::from_elem(self.value(*x).raw_dim(), g[[0, 0]]);
                    accumulate(&mut grads, *x, dx);
                }
            }
        }
        Gradients { slots: grads }
    }
}

fn accumulate<S: Scalar>(grads: &mut [Option<Array2<S>>], id: NodeId, delta: Array2<S>) {
    match &mut grads[id.0] {
        Some(g) => *g = &*g + &delta,
        slot @ None => *slot = Some(delta),
    }
}

/// Per-node gradients produced by [`Tape::backward`].
pub struct Gradients<S> {
    slots: Vec<Option<Array2<S>>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn get(&self, id: NodeId) -> Option<&Array2<S>> {
        self.slots[id.0].as_ref()
    }

    /// Gradient for `id`, or zeros of the given shape when the node did
    /// not influence the loss.
    pub fn take_or_zeros(&mut self, id: NodeId, shape: (usize, usize)) -> Array2<S> {
        self.slots[id.0]
            .take()
            .unwrap_or_else(|| Array2::zeros(shape))
    }
}

/// Row-wise argmax skipping the forbidden ids.
pub(crate) fn argmax_rows<S: Scalar>(values: &Array2<S>, forbidden: &[usize]) -> Vec<usize> {
    values
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = usize::MAX;
            let mut best_v = S::neg_infinity();
            for (i, v) in row.iter().enumerate() {
                if forbidden.contains(&i) {
                    continue;
                }
                if best == usize::MAX || *v > best_v {
                    best = i;
                    best_v = *v;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
    }

    /// Central finite differences on every element of every input leaf.
    fn fd_check<F>(inputs: &[Array2<f64>], build: F)
    where
        F: Fn(&mut Tape<f64>, &[NodeId]) -> NodeId,
    {
        let eps = 1e-6;
        let forward = |arrays: &[Array2<f64>]| -> f64 {
            let mut tape = Tape::new();
            let ids: Vec<NodeId> = arrays.iter().map(|a| tape.leaf(a.clone())).collect();
            let root = build(&mut tape, &ids);
            tape.scalar(root)
        };
        let mut tape = Tape::new();
        let ids: Vec<NodeId> = inputs.iter().map(|a| tape.leaf(a.clone())).collect();
        let root = build(&mut tape, &ids);
        let grads = tape.backward(root, 1.0);

        for (k, input) in inputs.iter().enumerate() {
            let analytic = grads
                .get(ids[k])
                .cloned()
                .unwrap_or_else(|| Array2::zeros(input.raw_dim()));
            for ((r, c), _) in input.indexed_iter() {
                let mut plus = inputs.to_vec();
                plus[k][[r, c]] += eps;
                let mut minus = inputs.to_vec();
                minus[k][[r, c]] -= eps;
                let numeric = (forward(&plus) - forward(&minus)) / (2.0 * eps);
                let a = analytic[[r, c]];
                let denom = a.abs().max(numeric.abs()).max(1e-6);
                assert!(
                    (a - numeric).abs() / denom < 1e-6,
                    "input {k} at ({r},{c}): analytic {a} vs numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn linear_chain_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(3, 4, &mut rng);
        let w = random(5, 4, &mut rng);
        let b = random(1, 5, &mut rng);
        fd_check(&[x, w, b], |t, ids| {
            let y = t.linear(ids[0], ids[1]);
            let y = t.add_row(y, ids[2]);
            let y = t.tanh(y);
            t.sum_all(y)
        });
    }

    #[test]
    fn elementwise_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(2, 3, &mut rng);
        let b = random(2, 3, &mut rng);
        fd_check(&[a, b], |t, ids| {
            let s = t.sigmoid(ids[0]);
            let m = t.mul(s, ids[1]);
            let c = t.add(m, ids[0]);
            t.sum_all(c)
        });
    }

    #[test]
    fn concat_slice_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(2, 3, &mut rng);
        let b = random(2, 2, &mut rng);
        fd_check(&[a, b], |t, ids| {
            let cat = t.concat_cols(ids[0], ids[1]);
            let left = t.slice_cols(cat, 1, 3);
            let y = t.tanh(left);
            t.sum_all(y)
        });
    }

    #[test]
    fn rows_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let table = random(5, 3, &mut rng);
        fd_check(&[table], |t, ids| {
            // Repeated id exercises gradient accumulation on one row.
            let r = t.rows(ids[0], &[1, 3, 1]);
            let y = t.sigmoid(r);
            t.sum_all(y)
        });
    }

    #[test]
    fn attend_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m0 = random(2, 4, &mut rng);
        let m1 = random(2, 4, &mut rng);
        let m2 = random(2, 4, &mut rng);
        let q = random(2, 4, &mut rng);
        fd_check(&[m0, m1, m2, q], |t, ids| {
            let ctx = t.attend(&ids[..3], ids[3]);
            let y = t.tanh(ctx);
            t.sum_all(y)
        });
    }

    #[test]
    fn cross_entropy_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let logits = random(3, 5, &mut rng);
        fd_check(&[logits], |t, ids| {
            t.cross_entropy_sum(ids[0], &[2, 0, 4], &[true, false, true])
        });
    }

    #[test]
    fn attention_weights_are_a_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tape = Tape::<f64>::new();
        let mem: Vec<NodeId> = (0..4)
            .map(|_| {
                let v = random(3, 4, &mut rng);
                tape.leaf(v)
            })
            .collect();
        let q = random(3, 4, &mut rng);
        let q = tape.leaf(q);
        let ctx = tape.attend(&mem, q);
        let alpha = tape.attention_weights(ctx).unwrap();
        for row in alpha.rows() {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn single_position_attention_weight_is_one() {
        let mut tape = Tape::<f64>::new();
        let m = tape.leaf(arr2(&[[0.3, -0.2]]));
        let q = tape.leaf(arr2(&[[1.0, 2.0]]));
        let ctx = tape.attend(&[m], q);
        let alpha = tape.attention_weights(ctx).unwrap();
        assert_eq!(alpha.dim(), (1, 1));
        assert!((alpha[[0, 0]] - 1.0).abs() < 1e-15);
        assert_eq!(tape.value(ctx), tape.value(m));
    }

    #[test]
    fn argmax_skips_forbidden() {
        let v = arr2(&[[0.1, 0.9, 0.5], [0.7, 0.2, 0.3]]);
        assert_eq!(argmax_rows(&v, &[]), vec![1, 0]);
        assert_eq!(argmax_rows(&v, &[1, 0]), vec![2, 2]);
    }
}
