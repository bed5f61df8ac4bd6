//! Versioned analyzer checkpoint.
//!
//! JSON container holding the config, the layout table and the flat weights as
//! hex-encoded little-endian `f64` bytes, guarded by a SHA-256 digest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::codec::{layout, param_count_formula, TensorSpec};
use super::{decode_params, AnalyzerConfig, Network};
use crate::error::{Error, Result};

pub const FORMAT: &str = "neurela-analyzer";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generation: Option<usize>,
    pub seed: Option<u64>,
    pub fitness: Option<f64>,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerCheckpoint {
    pub format: String,
    pub version: u32,
    pub config: AnalyzerConfig,
    pub layout: Vec<TensorSpec>,
    pub param_count: usize,
    pub provenance: Provenance,
    pub values_f64le_hex: String,
    pub sha256: String,
}

pub fn values_to_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl AnalyzerCheckpoint {
    pub fn new(config: &AnalyzerConfig, values: &[f64], provenance: Provenance) -> Result<Self> {
        let expected = param_count_formula(config);
        if values.len() != expected {
            return Err(Error::ParamLength {
                expected,
                actual: values.len(),
            });
        }
        let bytes = values_to_bytes(values);
        Ok(Self {
            format: FORMAT.to_string(),
            version: VERSION,
            config: config.clone(),
            layout: layout(config),
            param_count: expected,
            provenance,
            sha256: digest_hex(&bytes),
            values_f64le_hex: hex::encode(bytes),
        })
    }

    pub fn from_network(net: &Network, provenance: Provenance) -> Result<Self> {
        Self::new(net.config(), &net.encode().values, provenance)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text)?;
        Ok(())
    }

    /// Loads and verifies format, digest, layout and length.
    pub fn load(path: &Path) -> Result<Self> {
        let integrity = |reason: String| Error::Integrity {
            path: path.to_path_buf(),
            reason,
        };
        let text = fs::read_to_string(path)?;
        let ckpt: AnalyzerCheckpoint =
            serde_json::from_str(&text).map_err(|e| integrity(format!("malformed checkpoint: {e}")))?;
        if ckpt.format != FORMAT {
            return Err(integrity(format!("unexpected format `{}`", ckpt.format)));
        }
        if ckpt.version != VERSION {
            return Err(integrity(format!("unsupported version {}", ckpt.version)));
        }
        let bytes = hex::decode(&ckpt.values_f64le_hex).map_err(|e| integrity(format!("bad weight encoding: {e}")))?;
        if digest_hex(&bytes) != ckpt.sha256 {
            return Err(integrity("weight digest mismatch".into()));
        }
        if bytes.len() != ckpt.param_count * 8 || ckpt.param_count != param_count_formula(&ckpt.config) {
            return Err(integrity(format!(
                "parameter count {} does not match config (expected {})",
                bytes.len() / 8,
                param_count_formula(&ckpt.config)
            )));
        }
        if ckpt.layout != layout(&ckpt.config) {
            return Err(integrity("layout table does not match config".into()));
        }
        Ok(ckpt)
    }

    pub fn values(&self) -> Vec<f64> {
        let bytes = hex::decode(&self.values_f64le_hex).expect("verified on load or construction");
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    }

    pub fn network(&self) -> Result<Network> {
        decode_params(&self.values(), &self.config)
    }
}
