//! The sequence-to-sequence network: bidirectional LSTM encoder,
//! unidirectional LSTM decoder with attention, shared input/output
//! embeddings, greedy decoding, teacher-forced Adam training and a
//! finite-difference gradient check.

mod checkpoint;
mod decode;
mod gradcheck;
mod net;
mod params;
mod train;

pub use checkpoint::{file_sha256, load_checkpoint, save_checkpoint, vocab_hash};
pub use decode::{decode_step, encode, greedy_decode, greedy_decode_batch, DecoderState, EncoderOutput};
pub use gradcheck::grad_check;
pub use params::{ArchConfig, ModelParams};
pub use train::{loss, train_epochs, EpochStats, TrainSettings};
