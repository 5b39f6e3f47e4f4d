//! Encoded dataset cache: `LIDSDATA` magic, little-endian `u32` header
//! length, a JSON header (schema, encoder state, provenance, labels) and then
//! the `[N, 42]` feature matrix as little-endian IEEE-754 `f32`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{EncodedDataset, EncoderState, FeatureSchema, Provenance, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CACHE_MAGIC: &[u8; 8] = b"LIDSDATA";
pub const CACHE_VERSION: u16 = 1;

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    version: u16,
    rows: usize,
    schema: FeatureSchema,
    encoder: EncoderState,
    provenance: Provenance,
    binary_labels: Vec<u8>,
    multiclass_labels: Vec<u8>,
}

pub fn encode_cache(dataset: &EncodedDataset) -> Result<Vec<u8>> {
    let header = CacheHeader {
        version: CACHE_VERSION,
        rows: dataset.len(),
        schema: dataset.encoder().schema.clone(),
        encoder: dataset.encoder().clone(),
        provenance: dataset.provenance().clone(),
        binary_labels: dataset.binary_labels().to_vec(),
        multiclass_labels: dataset.multiclass_labels().to_vec(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(12 + json.len() + dataset.features().len() * 4);
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in dataset.features().data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_cache(bytes: &[u8]) -> Result<EncodedDataset> {
    if bytes.len() < 12 || &bytes[..8] != CACHE_MAGIC {
        return Err(Error::BadMagic {
            expected: "LIDSDATA",
        });
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = bytes
        .get(12..12 + hlen)
        .ok_or_else(|| Error::Header(format!("header length {hlen} exceeds file size")))?;
    let header: CacheHeader =
        serde_json::from_slice(body).map_err(|e| Error::Header(e.to_string()))?;
    if header.version != CACHE_VERSION {
        return Err(Error::UnsupportedVersion {
            found: header.version,
            supported: CACHE_VERSION,
        });
    }
    let floats = &bytes[12 + hlen..];
    if floats.len() != header.rows * NUM_FEATURES * 4 {
        return Err(Error::Dataset(format!(
            "cache holds {} feature bytes, expected {}",
            floats.len(),
            header.rows * NUM_FEATURES * 4
        )));
    }
    let data: Vec<f32> = floats
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    EncodedDataset::new(
        Tensor::new(vec![header.rows, NUM_FEATURES, 1], data)?,
        header.binary_labels,
        header.multiclass_labels,
        header.provenance,
        header.encoder,
    )
}

pub fn write_cache(path: impl AsRef<Path>, dataset: &EncodedDataset) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_cache(dataset)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<EncodedDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cache(&bytes)
}
