//! Binary checkpoints and CSV outputs.
//!
//! Checkpoint layout: the magic bytes `DVAE`, a little-endian u16 format
//! version, a little-endian u32 byte length followed by a JSON header
//! (`{"config", "preprocessor"}`), then every parameter as a little-endian
//! f64 in [`LAYER_NAMES`](super::LAYER_NAMES) order, weights row-major
//! before biases.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::input::Preprocessor;
use super::loss::LossBreakdown;
use super::params::ModelParams;
use super::train::TrainedModel;
use crate::diffnet::Matrix;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DVAE";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: ModelConfig,
    preprocessor: Preprocessor,
}

pub fn encode_checkpoint(model: &TrainedModel) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header {
        config: model.config.clone(),
        preprocessor: model.preprocessor.clone(),
    })?;
    let len =
        u32::try_from(header.len()).map_err(|_| Error::Checkpoint("header too large".into()))?;
    let params = model.params.flatten();
    let mut out = Vec::with_capacity(10 + header.len() + 8 * params.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&header);
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<TrainedModel> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    if bytes.len() < 10 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(bad("missing DVAE magic bytes"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version}"
        )));
    }
    let len = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let body = &bytes[10..];
    if body.len() < len {
        return Err(bad("truncated header"));
    }
    let header: Header = serde_json::from_slice(&body[..len])
        .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    header.config.validate()?;
    let raw = &body[len..];
    if !raw.len().is_multiple_of(8) {
        return Err(bad("parameter block is not a whole number of f64 values"));
    }
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let params = ModelParams::from_flat(&header.config, &values)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    if !params.is_finite() {
        return Err(bad("non-finite parameter values"));
    }
    Ok(TrainedModel {
        config: header.config,
        preprocessor: header.preprocessor,
        params,
    })
}

pub fn save_checkpoint(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_checkpoint(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

pub fn history_csv(history: &[LossBreakdown]) -> String {
    let mut out = String::from("epoch,alpha,recon,kl,consistency,violation,total\n");
    for (i, h) in history.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            i + 1,
            h.alpha,
            h.recon,
            h.kl,
            h.consistency,
            h.violation,
            h.total
        )
        .expect("write to String");
    }
    out
}

pub fn write_history(history: &[LossBreakdown], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, history_csv(history)).map_err(|e| Error::io(path, e))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `id,z0,…,z{d-1}` with one row per sample.
pub fn latent_csv(ids: &[String], latent: &Matrix) -> Result<String> {
    if ids.len() != latent.rows() {
        return Err(Error::shape(format!(
            "{} ids for {} latent rows",
            ids.len(),
            latent.rows()
        )));
    }
    let mut out = String::from("id");
    for j in 0..latent.cols() {
        write!(out, ",z{j}").expect("write to String");
    }
    out.push('\n');
    for (id, row) in ids.iter().zip(latent.row_iter()) {
        out.push_str(&csv_field(id));
        for v in row {
            write!(out, ",{v}").expect("write to String");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_latent(ids: &[String], latent: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, latent_csv(ids, latent)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_header_and_rows() {
        let h = vec![LossBreakdown::combine(1.0, 0.5, 0.25, 0.125, 0.0, 1.0)];
        assert_eq!(
            history_csv(&h),
            "epoch,alpha,recon,kl,consistency,violation,total\n1,0,1,0.5,0.25,0.125,1.5\n"
        );
    }

    #[test]
    fn latent_quotes_awkward_ids() {
        let m = Matrix::from_rows(&[[1.0, -0.5]]).unwrap();
        let s = latent_csv(&["a,b".to_string()], &m).unwrap();
        assert_eq!(s, "id,z0,z1\n\"a,b\",1,-0.5\n");
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            decode_checkpoint(b"NOPE\x01\x00"),
            Err(Error::Checkpoint(_))
        ));
        assert!(matches!(
            decode_checkpoint(b"DVAE\x09\x00\x00\x00\x00\x00"),
            Err(Error::Checkpoint(_))
        ));
    }
}
