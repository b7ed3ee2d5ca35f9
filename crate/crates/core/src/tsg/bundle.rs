//! File exchange with out-of-process generators.
//!
//! A bundle is a directory holding `manifest.json` and `payload.f64`, the
//! latter being `n * length` raw little-endian float64 values in row-major
//! order (asset-major: all hours of asset 0 first).

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PAYLOAD_FILE: &str = "payload.f64";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported bundle schema version {0}")]
    SchemaVersionUnsupported(u64),
    #[error("payload holds {got} values, manifest declares {expected}")]
    PayloadShapeMismatch { expected: usize, got: usize },
    #[error("bad manifest: {0}")]
    BadManifest(String),
    #[error("missing payload in {0}")]
    MissingPayload(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleMode {
    Generate,
    Reconstruct,
}

impl BundleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BundleMode::Generate => "generate",
            BundleMode::Reconstruct => "reconstruct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub model_id: String,
    pub mode: BundleMode,
    pub tau: usize,
    pub n: usize,
    pub length: usize,
    pub seed: u64,
    pub asset_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeBundle {
    pub manifest: Manifest,
    /// `n x length`.
    pub payload: Array2<f64>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn check_manifest(m: &Manifest) -> Result<(), BundleError> {
    if m.schema_version != SCHEMA_VERSION {
        return Err(BundleError::SchemaVersionUnsupported(m.schema_version as u64));
    }
    if m.asset_ids.len() != m.n {
        return Err(BundleError::BadManifest(format!(
            "{} asset ids for n = {}",
            m.asset_ids.len(),
            m.n
        )));
    }
    Ok(())
}

pub fn write_bundle(bundle: &ExchangeBundle, dir: impl AsRef<Path>) -> Result<(), BundleError> {
    let dir = dir.as_ref();
    let m = &bundle.manifest;
    check_manifest(m)?;
    let (rows, cols) = bundle.payload.dim();
    if rows != m.n || cols != m.length {
        return Err(BundleError::PayloadShapeMismatch {
            expected: m.n * m.length,
            got: rows * cols,
        });
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_vec_pretty(m).map_err(|e| BundleError::BadManifest(e.to_string()))?;
    fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;

    let mut bytes = Vec::with_capacity(rows * cols * 8);
    // iterate in logical row-major order regardless of memory layout
    for i in 0..rows {
        for t in 0..cols {
            bytes.extend_from_slice(&bundle.payload[[i, t]].to_le_bytes());
        }
    }
    let payload_path = dir.join(PAYLOAD_FILE);
    fs::write(&payload_path, bytes).map_err(io_err(&payload_path))?;
    Ok(())
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest, BundleError> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let raw = fs::read(&path).map_err(io_err(&path))?;
    let value: serde_json::Value = serde_json::from_slice(&raw).map_err(|e| BundleError::BadManifest(e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(BundleError::SchemaVersionUnsupported(v)),
        None => return Err(BundleError::BadManifest("missing integer schema_version".into())),
    }
    let manifest: Manifest = serde_json::from_value(value).map_err(|e| BundleError::BadManifest(e.to_string()))?;
    check_manifest(&manifest)?;
    Ok(manifest)
}

pub fn read_bundle(dir: impl AsRef<Path>) -> Result<ExchangeBundle, BundleError> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let path = dir.join(PAYLOAD_FILE);
    if !path.exists() {
        return Err(BundleError::MissingPayload(dir.to_path_buf()));
    }
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let expected = manifest.n * manifest.length;
    if bytes.len() % 8 != 0 || bytes.len() / 8 != expected {
        return Err(BundleError::PayloadShapeMismatch {
            expected,
            got: bytes.len() / 8,
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let payload = Array2::from_shape_vec((manifest.n, manifest.length), values)
        .map_err(|e| BundleError::BadManifest(e.to_string()))?;
    Ok(ExchangeBundle { manifest, payload })
}
