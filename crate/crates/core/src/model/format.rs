//! Binary model files: `LIDS` magic, version, JSON header, f32 weights, CRC32.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::EncoderState;
use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::network::{Network, PARAM_NAMES};
use crate::model::train::TrainingMetadata;
use crate::model::TrainedModel;
use crate::tensor::Tensor;

pub const MODEL_MAGIC: &[u8; 4] = b"LIDS";
pub const MODEL_VERSION: u16 = 1;
/// Magic, version and header length.
const PREAMBLE: usize = 4 + 2 + 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset from the start of the weight section.
    pub offset: usize,
    /// Number of f32 scalars.
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelHeader {
    pub config: ModelConfig,
    pub encoder: EncoderState,
    pub class_names: Vec<String>,
    pub metadata: TrainingMetadata,
    pub manifest: Vec<ManifestEntry>,
}

impl ModelHeader {
    pub fn param_count(&self) -> usize {
        self.manifest.iter().map(|m| m.len).sum()
    }
}

pub fn encode_model(model: &TrainedModel) -> Result<Vec<u8>> {
    let net = model.network();
    let mut manifest = Vec::with_capacity(PARAM_NAMES.len());
    let mut offset = 0;
    for (name, p) in PARAM_NAMES.iter().zip(net.params()) {
        manifest.push(ManifestEntry {
            name: name.to_string(),
            shape: p.shape().to_vec(),
            offset,
            len: p.len(),
        });
        offset += p.len() * 4;
    }
    let header = ModelHeader {
        config: net.config().clone(),
        encoder: model.encoder().clone(),
        class_names: model.class_names().to_vec(),
        metadata: model.metadata().clone(),
        manifest,
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(PREAMBLE + json.len() + offset + 4);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in net.params() {
        for v in p.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Checksum error computed from whatever trailing bytes the file has.
fn checksum_error(bytes: &[u8]) -> Error {
    let split = bytes.len().saturating_sub(4);
    let mut tail = [0u8; 4];
    tail[..bytes.len() - split].copy_from_slice(&bytes[split..]);
    Error::ChecksumMismatch {
        stored: u32::from_le_bytes(tail),
        computed: crc32fast::hash(&bytes[..split]),
    }
}

/// Parses only the JSON header; the weights are not checked.
pub fn decode_header(bytes: &[u8]) -> Result<(ModelHeader, usize)> {
    if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
        return Err(Error::BadMagic { expected: "LIDS" });
    }
    if bytes.len() < PREAMBLE {
        return Err(checksum_error(bytes));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MODEL_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: MODEL_VERSION,
        });
    }
    let hlen = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let end = PREAMBLE
        .checked_add(hlen)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| checksum_error(bytes))?;
    let header: ModelHeader = serde_json::from_slice(&bytes[PREAMBLE..end])
        .map_err(|e| Error::Header(format!("model header: {e}")))?;
    Ok((header, end))
}

pub fn decode_model(bytes: &[u8]) -> Result<TrainedModel> {
    let (header, start) = decode_header(bytes)?;
    if bytes.len() < start + 4 {
        return Err(checksum_error(bytes));
    }
    let body_end = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[body_end..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    header.config.validate()?;

    let weights = &bytes[start..body_end];
    let expected = Network::<f32>::expected_shapes(&header.config);
    if header.manifest.len() != expected.len() {
        return Err(Error::Header(format!(
            "manifest lists {} tensors, expected {}",
            header.manifest.len(),
            expected.len()
        )));
    }
    let mut params = Vec::with_capacity(expected.len());
    for ((entry, shape), name) in header.manifest.iter().zip(&expected).zip(PARAM_NAMES) {
        if entry.name != name
            || &entry.shape != shape
            || entry.len != shape.iter().product::<usize>()
        {
            return Err(Error::Header(format!(
                "manifest entry `{}` does not match the configured layer `{name}`",
                entry.name
            )));
        }
        let stop = entry.offset + entry.len * 4;
        let raw = weights.get(entry.offset..stop).ok_or_else(|| {
            Error::Header(format!("tensor `{name}` lies outside the weight section"))
        })?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        params.push(Tensor::new(shape.clone(), data)?);
    }
    let total: usize = header.param_count() * 4;
    if total != weights.len() {
        return Err(Error::Header(format!(
            "weight section has {} bytes, manifest accounts for {total}",
            weights.len()
        )));
    }
    let net = Network::from_params(&header.config, params)?;
    TrainedModel::from_parts(net, header.encoder, header.class_names, header.metadata)
}

pub fn save(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(model)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

/// Reads a model file's header after verifying its checksum.
pub fn inspect(path: impl AsRef<Path>) -> Result<ModelHeader> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)?;
    Ok(decode_header(&bytes)?.0)
}
