//! Save a trained model, reload it, and show that damaged files are refused.

use lids::dataset::synth::{generate, SynthConfig};
use lids::dataset::{EncoderState, Provenance};
use lids::model::{
    decode_model, encode_model, load, predict_proba, save, train, ModelConfig, TrainConfig,
};
use lids::Error;

pub fn run_example() -> lids::Result<()> {
    let raw = generate(&SynthConfig::balanced_binary(400, 2))?;
    let data = EncoderState::fit(&raw)?.transform(&raw, Provenance::derived("synthetic"))?;
    let cfg = TrainConfig {
        epochs: 1,
        seed: 2,
        ..TrainConfig::binary()
    };
    let (model, _) = train(&ModelConfig::binary(), &data, &cfg)?;

    let path = std::env::temp_dir().join(format!("lids-roundtrip-{}.lids", std::process::id()));
    save(&model, &path)?;
    let loaded = load(&path)?;
    let (a, b) = (
        predict_proba(&model, data.features())?,
        predict_proba(&loaded, data.features())?,
    );
    let identical = a
        .data()
        .iter()
        .zip(b.data())
        .all(|(x, y)| x.to_bits() == y.to_bits());
    println!(
        "{} bytes, {} parameters, predictions identical: {identical}",
        std::fs::metadata(&path).map_or(0, |m| m.len()),
        loaded.param_count()
    );
    let _ = std::fs::remove_file(&path);

    let bytes = encode_model(&model)?;
    match decode_model(&bytes[..bytes.len() - 100]) {
        Err(e @ Error::ChecksumMismatch { .. }) => println!("truncated: {e}"),
        other => panic!("expected a checksum error, got {other:?}"),
    }
    let mut bad = bytes.clone();
    bad[12] = b'#';
    match decode_model(&bad) {
        Err(e @ Error::Header(_)) => println!("corrupted header: {e}"),
        other => panic!("expected a header error, got {other:?}"),
    }
    let mut bad = bytes;
    bad[0] = b'X';
    match decode_model(&bad) {
        Err(e @ Error::BadMagic { .. }) => println!("wrong magic: {e}"),
        other => panic!("expected a magic error, got {other:?}"),
    }
    Ok(())
}

fn main() -> lids::Result<()> {
    run_example()
}
