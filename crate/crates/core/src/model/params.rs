//! Model parameters: architecture descriptor, tensor storage and
//! initialization.

use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Scalar;

/// Network shape. The `small` and `large` presets are the two searched
/// configurations; anything else can be built directly for experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub embedding_dim: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub dropout: f64,
}

impl ArchConfig {
    pub fn small() -> Self {
        Self {
            embedding_dim: 200,
            hidden_size: 256,
            num_layers: 2,
            dropout: 0.3,
        }
    }

    pub fn large() -> Self {
        Self {
            embedding_dim: 150,
            hidden_size: 900,
            num_layers: 2,
            dropout: 0.3,
        }
    }

    /// Parameter count of the two presets differs; ties in model selection
    /// break toward fewer parameters.
    pub fn param_count(&self, vocab_size: usize) -> usize {
        // Exact count is what the layout registers; recompute cheaply.
        layout_param_count(self, vocab_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 || self.hidden_size == 0 || self.num_layers == 0 {
            return Err(Error::Config(
                "architecture dimensions must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Tensor indices of one LSTM direction/layer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LstmIdx {
    pub w_x: usize,
    pub w_h: usize,
    pub bias: usize,
}

/// Named positions of every tensor in the flat storage.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub embedding: usize,
    /// Per encoder layer: (forward, backward).
    pub enc: Vec<(LstmIdx, LstmIdx)>,
    pub dec: Vec<LstmIdx>,
    pub attn_w: usize,
    pub combine_w: usize,
    pub combine_b: usize,
    pub out_bias: usize,
    /// Per decoder layer: (weight, bias) projecting encoder finals.
    pub init_h: Vec<(usize, usize)>,
    pub init_c: Vec<(usize, usize)>,
}

struct Registrar<S> {
    tensors: Vec<Arc<Array2<S>>>,
    names: Vec<String>,
    rng: ChaCha8Rng,
}

impl<S: Scalar> Registrar<S> {
    fn uniform(&mut self, name: String, rows: usize, cols: usize, bound: f64) -> usize {
        let rng = &mut self.rng;
        let t = Array2::from_shape_fn((rows, cols), |_| S::from_f64(rng.gen_range(-bound..bound)));
        self.put(name, t)
    }

    /// Weight matrix with uniform(±1/√fan_in) entries; draws go through
    /// f64 so f32 and f64 models share the same stream for a given seed.
    fn weight(&mut self, name: String, rows: usize, cols: usize) -> usize {
        self.uniform(name, rows, cols, 1.0 / (cols as f64).sqrt())
    }

    fn zeros(&mut self, name: String, rows: usize, cols: usize) -> usize {
        self.put(name, Array2::zeros((rows, cols)))
    }

    fn put(&mut self, name: String, t: Array2<S>) -> usize {
        self.tensors.push(Arc::new(t));
        self.names.push(name);
        self.tensors.len() - 1
    }

    fn lstm(&mut self, prefix: &str, input: usize, hidden: usize) -> LstmIdx {
        let w_x = self.weight(format!("{prefix}.w_x"), 4 * hidden, input);
        let w_h = self.weight(format!("{prefix}.w_h"), 4 * hidden, hidden);
        let bias = self.zeros(format!("{prefix}.bias"), 1, 4 * hidden);
        // Forget gate bias starts open.
        let b = Arc::make_mut(&mut self.tensors[bias]);
        for j in hidden..2 * hidden {
            b[[0, j]] = S::one();
        }
        LstmIdx { w_x, w_h, bias }
    }
}

fn layout_param_count(arch: &ArchConfig, vocab_size: usize) -> usize {
    let e = arch.embedding_dim;
    let h = arch.hidden_size;
    let mut n = vocab_size * e; // embedding
    for l in 0..arch.num_layers {
        let input = if l == 0 { e } else { 2 * h };
        n += 2 * (4 * h * input + 4 * h * h + 4 * h); // both directions
        let dec_input = if l == 0 { e } else { h };
        n += 4 * h * dec_input + 4 * h * h + 4 * h;
        n += 2 * (h * 2 * h + h); // init_h, init_c projections
    }
    n += 2 * h * h; // attention
    n += e * 3 * h + e; // combine
    n += vocab_size; // output bias
    n
}

/// All trainable tensors plus the architecture descriptor.
///
/// The embedding matrix is stored once and referenced by both the input
/// encoding and the pre-softmax output projection.
#[derive(Debug, Clone)]
pub struct ModelParams<S> {
    pub arch: ArchConfig,
    pub vocab_size: usize,
    tensors: Vec<Arc<Array2<S>>>,
    names: Vec<String>,
    pub(crate) layout: Layout,
}

impl<S: Scalar> ModelParams<S> {
    /// Fresh, seeded initialization.
    pub fn new(arch: ArchConfig, vocab_size: usize, seed: u64) -> Result<Self> {
        arch.validate()?;
        if vocab_size == 0 {
            return Err(Error::Config("vocabulary must be non-empty".into()));
        }
        let mut reg = Registrar {
            tensors: Vec::new(),
            names: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        let e = arch.embedding_dim;
        let h = arch.hidden_size;

        let embedding = reg.uniform("embedding".into(), vocab_size, e, 0.1);
        let mut enc = Vec::with_capacity(arch.num_layers);
        for l in 0..arch.num_layers {
            let input = if l == 0 { e } else { 2 * h };
            let fwd = reg.lstm(&format!("enc.{l}.fwd"), input, h);
            let bwd = reg.lstm(&format!("enc.{l}.bwd"), input, h);
            enc.push((fwd, bwd));
        }
        let mut dec = Vec::with_capacity(arch.num_layers);
        for l in 0..arch.num_layers {
            let input = if l == 0 { e } else { h };
            dec.push(reg.lstm(&format!("dec.{l}"), input, h));
        }
        let attn_w = reg.weight("attn_w".into(), 2 * h, h);
        let combine_w = reg.weight("combine_w".into(), e, 3 * h);
        let combine_b = reg.zeros("combine_b".into(), 1, e);
        let out_bias = reg.zeros("out_bias".into(), 1, vocab_size);
        let mut init_h = Vec::with_capacity(arch.num_layers);
        let mut init_c = Vec::with_capacity(arch.num_layers);
        for l in 0..arch.num_layers {
            let wh = reg.weight(format!("init_h.{l}.w"), h, 2 * h);
            let bh = reg.zeros(format!("init_h.{l}.b"), 1, h);
            init_h.push((wh, bh));
            let wc = reg.weight(format!("init_c.{l}.w"), h, 2 * h);
            let bc = reg.zeros(format!("init_c.{l}.b"), 1, h);
            init_c.push((wc, bc));
        }
        let layout = Layout {
            embedding,
            enc,
            dec,
            attn_w,
            combine_w,
            combine_b,
            out_bias,
            init_h,
            init_c,
        };
        Ok(Self {
            arch,
            vocab_size,
            tensors: reg.tensors,
            names: reg.names,
            layout,
        })
    }

    pub fn tensors(&self) -> &[Arc<Array2<S>>] {
        &self.tensors
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut [Arc<Array2<S>>] {
        &mut self.tensors
    }

    pub fn tensor_names(&self) -> &[String] {
        &self.names
    }

    /// Rebuilds a parameter set from raw tensors, validating shapes
    /// against a freshly laid-out model.
    pub fn from_tensors(
        arch: ArchConfig,
        vocab_size: usize,
        tensors: Vec<Array2<S>>,
    ) -> Result<Self> {
        let mut model = Self::new(arch, vocab_size, 0)?;
        if tensors.len() != model.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                model.tensors.len(),
                tensors.len()
            )));
        }
        for (i, t) in tensors.into_iter().enumerate() {
            if t.raw_dim() != model.tensors[i].raw_dim() {
                return Err(Error::Checkpoint(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    model.names[i],
                    t.dim(),
                    model.tensors[i].dim()
                )));
            }
            model.tensors[i] = Arc::new(t);
        }
        Ok(model)
    }

    /// Total scalar count across all tensors.
    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    /// Reads the scalar at a flat index spanning all tensors in layout
    /// order (row-major within each tensor).
    pub fn get_flat(&self, index: usize) -> S {
        let (t, off) = self.locate(index);
        let cols = self.tensors[t].ncols();
        self.tensors[t][[off / cols, off % cols]]
    }

    pub fn set_flat(&mut self, index: usize, value: S) {
        let (t, off) = self.locate(index);
        let cols = self.tensors[t].ncols();
        Arc::make_mut(&mut self.tensors[t])[[off / cols, off % cols]] = value;
    }

    fn locate(&self, mut index: usize) -> (usize, usize) {
        for (t, tensor) in self.tensors.iter().enumerate() {
            if index < tensor.len() {
                return (t, index);
            }
            index -= tensor.len();
        }
        panic!("flat index out of range");
    }

    pub fn all_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Casts every tensor through `f64` into another precision.
    pub fn to_precision<T: Scalar>(&self) -> ModelParams<T> {
        let tensors = self
            .tensors
            .iter()
            .map(|t| Arc::new(t.mapv(|v| T::from_f64(v.as_f64()))))
            .collect();
        ModelParams {
            arch: self.arch,
            vocab_size: self.vocab_size,
            tensors,
            names: self.names.clone(),
            layout: self.layout.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_reported_sizes() {
        let s = ArchConfig::small();
        assert_eq!((s.embedding_dim, s.hidden_size), (200, 256));
        let l = ArchConfig::large();
        assert_eq!((l.embedding_dim, l.hidden_size), (150, 900));
        assert_eq!(s.num_layers, 2);
        assert_eq!(l.num_layers, 2);
    }

    #[test]
    fn small_has_fewer_parameters_than_large() {
        assert!(ArchConfig::small().param_count(60) < ArchConfig::large().param_count(60));
    }

    #[test]
    fn param_count_matches_layout() {
        let arch = ArchConfig {
            embedding_dim: 8,
            hidden_size: 6,
            num_layers: 2,
            dropout: 0.0,
        };
        let m = ModelParams::<f64>::new(arch, 11, 1).unwrap();
        assert_eq!(m.num_scalars(), arch.param_count(11));
    }

    #[test]
    fn initialization_is_seeded() {
        let arch = ArchConfig {
            embedding_dim: 4,
            hidden_size: 3,
            num_layers: 1,
            dropout: 0.0,
        };
        let a = ModelParams::<f32>::new(arch, 9, 7).unwrap();
        let b = ModelParams::<f32>::new(arch, 9, 7).unwrap();
        let c = ModelParams::<f32>::new(arch, 9, 8).unwrap();
        assert_eq!(a.tensors()[0], b.tensors()[0]);
        assert_ne!(a.tensors()[0], c.tensors()[0]);
    }

    #[test]
    fn flat_accessors_roundtrip() {
        let arch = ArchConfig {
            embedding_dim: 4,
            hidden_size: 3,
            num_layers: 1,
            dropout: 0.0,
        };
        let mut m = ModelParams::<f64>::new(arch, 9, 7).unwrap();
        let n = m.num_scalars();
        let probe = [0, 1, n / 2, n - 1];
        for &i in &probe {
            let old = m.get_flat(i);
            m.set_flat(i, old + 1.0);
            assert_eq!(m.get_flat(i), old + 1.0);
        }
    }

    #[test]
    fn forget_gate_bias_starts_at_one() {
        let arch = ArchConfig {
            embedding_dim: 4,
            hidden_size: 3,
            num_layers: 1,
            dropout: 0.0,
        };
        let m = ModelParams::<f64>::new(arch, 9, 7).unwrap();
        let bias = &m.tensors()[m.layout.enc[0].0.bias];
        assert_eq!(bias[[0, 0]], 0.0); // input gate
        assert_eq!(bias[[0, 3]], 1.0); // forget gate
        assert_eq!(bias[[0, 6]], 0.0); // cell gate
    }
}
