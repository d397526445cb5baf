//! Checkpoint container: versioned header plus raw tensor payloads.
//!
//! Layout: magic `FLCT`, little-endian u32 version, little-endian u64
//! header length, a JSON header (architecture, vocabulary hash, tensor
//! table), then every tensor's values as little-endian `f32`, row-major,
//! in header order.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoding::Vocabulary;
use crate::error::{Error, Result};
use crate::nn::Scalar;

use super::params::{ArchConfig, ModelParams};

const MAGIC: &[u8; 4] = b"FLCT";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    arch: ArchConfig,
    vocab_size: usize,
    vocab_sha256: String,
    tensors: Vec<TensorInfo>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    rows: usize,
    cols: usize,
}

/// SHA-256 of the vocabulary's canonical text form, hex-encoded. Stored
/// in checkpoints so a model is never decoded through the wrong symbol
/// table.
pub fn vocab_hash(vocab: &Vocabulary) -> String {
    hex(&Sha256::digest(vocab.to_text().as_bytes()))
}

/// SHA-256 of a file's bytes, hex-encoded.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `params` to `path`. Tensor payloads are stored as `f32`
/// regardless of `S`; saving an `f64` model narrows its values.
pub fn save_checkpoint<S: Scalar>(
    params: &ModelParams<S>,
    vocab_sha256: &str,
    path: &Path,
) -> Result<()> {
    let header = Header {
        version: VERSION,
        arch: params.arch,
        vocab_size: params.vocab_size,
        vocab_sha256: vocab_sha256.to_string(),
        tensors: params
            .tensors()
            .iter()
            .zip(params.tensor_names())
            .map(|(t, name)| TensorInfo {
                name: name.clone(),
                rows: t.nrows(),
                cols: t.ncols(),
            })
            .collect(),
    };
    let header_bytes =
        serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(MAGIC)?;
    file.write_all(&VERSION.to_le_bytes())?;
    file.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    file.write_all(&header_bytes)?;
    for tensor in params.tensors() {
        for v in tensor.iter() {
            file.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
    }
    file.flush()?;
    Ok(())
}

/// Reads a checkpoint back. Returns the parameters and the vocabulary
/// hash recorded at save time.
pub fn load_checkpoint<S: Scalar>(path: &Path) -> Result<(ModelParams<S>, String)> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic, not a checkpoint file".into()));
    }
    let mut word = [0u8; 4];
    file.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mut len_bytes = [0u8; 8];
    file.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)?;
    let header: Header =
        serde_json::from_slice(&header_bytes).map_err(|e| Error::Checkpoint(e.to_string()))?;

    let mut tensors = Vec::with_capacity(header.tensors.len());
    for info in &header.tensors {
        let count = info.rows * info.cols;
        let mut payload = vec![0u8; count * 4];
        file.read_exact(&mut payload)?;
        let values: Vec<S> = payload
            .chunks_exact(4)
            .map(|chunk| {
                let bits = [chunk[0], chunk[1], chunk[2], chunk[3]];
                S::from_f64(f64::from(f32::from_le_bytes(bits)))
            })
            .collect();
        let tensor = Array2::from_shape_vec((info.rows, info.cols), values)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        tensors.push(tensor);
    }
    let params = ModelParams::from_tensors(header.arch, header.vocab_size, tensors)?;
    let expected: Vec<&str> = header.tensors.iter().map(|t| t.name.as_str()).collect();
    let actual: Vec<&str> = params.tensor_names().iter().map(String::as_str).collect();
    if expected != actual {
        return Err(Error::Checkpoint(
            "tensor table does not match the architecture".into(),
        ));
    }
    Ok((params, header.vocab_sha256))
}
