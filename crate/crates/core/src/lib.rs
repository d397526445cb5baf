//! Morphological inflection toolkit.
//!
//! End-to-end pieces for training character-level inflection models:
//!
//! - [`corpus`]: tab-separated lemma/form/tags datasets, organized by
//!   language and family, with low-resource flagging and character
//!   statistics.
//! - [`encoding`]: the shared symbol vocabulary and the serialization of
//!   samples into model input/output id sequences.
//! - [`augment`]: copy and stem-modification data augmentation.
//! - [`templates`]: whole-word template induction (forward/backward
//!   comparing, comparison merging, template-based generation).
//! - [`model`]: a bidirectional-LSTM encoder / attentional-LSTM decoder
//!   trained with teacher forcing and Adam, with greedy decoding and a
//!   finite-difference gradient check.
//! - [`pipeline`]: the three-step training regime (all languages →
//!   family → language), random hyperparameter search, and ablations.
//! - [`eval`]: exact-match accuracy and Levenshtein distance.
//!
//! The numeric core is generic over the scalar type (`f32`/`f64`) via
//! [`nn::Scalar`]; the aliases below pin the concrete types used by the
//! pipeline (`f32`) and by the gradient oracle (`f64`).

pub mod augment;
pub mod corpus;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod templates;

pub use error::{Error, Result};

/// Scalar type used for training and inference.
pub type TrainScalar = f32;
/// Scalar type used for gradient verification.
pub type CheckScalar = f64;

/// Model parameters at training precision.
pub type Model = model::ModelParams<TrainScalar>;
/// Model parameters at verification precision.
pub type Model64 = model::ModelParams<CheckScalar>;
