//! Resumable trainer state and the history/timing exports.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GenerationRecord;
use crate::error::{Error, Result};
use crate::es::EsState;

pub const STATE_FILE: &str = "trainer_state.json";
const FORMAT: &str = "neurela-trainer";
const VERSION: u32 = 1;

/// Serde helpers storing `f64` as the hex of its little-endian bytes, so
/// non-finite values survive and round trips are bit-exact.
pub mod f64_bits {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn encode(v: f64) -> String {
        hex::encode(v.to_le_bytes())
    }

    pub fn decode(s: &str) -> Result<f64, String> {
        let b = hex::decode(s).map_err(|e| e.to_string())?;
        let arr: [u8; 8] = b.try_into().map_err(|_| format!("expected 8 bytes in `{s}`"))?;
        Ok(f64::from_le_bytes(arr))
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&encode(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        decode(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

pub mod f64_vec_bits {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let b = hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)?;
        if b.len() % 8 != 0 {
            return Err(serde::de::Error::custom("value bytes not a multiple of 8"));
        }
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub mod opt_f64_bits {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&super::f64_bits::encode(*x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| super::f64_bits::decode(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

mod opt_vec_bits {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::f64_vec_bits")] Vec<f64>);

    pub fn serialize<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|x| Wrap(x.clone())).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

/// Everything needed to continue a run bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerState {
    pub format: String,
    pub version: u32,
    pub run_digest: String,
    pub es: EsState,
    pub history: Vec<GenerationRecord>,
    #[serde(with = "opt_vec_bits")]
    pub best: Option<Vec<f64>>,
    #[serde(with = "opt_f64_bits")]
    pub best_fitness: Option<f64>,
    pub baseline_fe: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    state: TrainerState,
    sha256: String,
}

fn digest(state: &TrainerState) -> Result<String> {
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(state)?)))
}

pub(super) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl TrainerState {
    pub fn new(run_digest: String, es: EsState) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            run_digest,
            es,
            history: Vec::new(),
            best: None,
            best_fitness: None,
            baseline_fe: 0,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let env = Envelope {
            sha256: digest(self)?,
            state: self.clone(),
        };
        atomic_write(path, &serde_json::to_vec(&env)?)
    }

    /// Loads and verifies the digest; any damage is an integrity error.
    pub fn load(path: &Path) -> Result<Self> {
        let integrity = |reason: String| Error::Integrity {
            path: path.to_path_buf(),
            reason,
        };
        let bytes = fs::read(path)?;
        let env: Envelope =
            serde_json::from_slice(&bytes).map_err(|e| integrity(format!("malformed trainer state: {e}")))?;
        if env.state.format != FORMAT || env.state.version != VERSION {
            return Err(integrity(format!(
                "unsupported state format {} v{}",
                env.state.format, env.state.version
            )));
        }
        if digest(&env.state)? != env.sha256 {
            return Err(integrity("trainer state digest mismatch".into()));
        }
        Ok(env.state)
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// History CSV: one row per generation with the candidate fitness values.
/// Wall times are kept out so that identical runs give identical files.
pub fn write_history_csv<W: Write>(out: W, records: &[GenerationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = records.first().map_or(0, |r| r.fitness.len());
    let mut header: Vec<String> = ["generation", "best_fitness", "generation_best", "fe_used", "best_digest"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..n).map(|i| format!("fitness_{i}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.generation.to_string(),
            r.best_fitness.map(fmt).unwrap_or_default(),
            fmt(r.generation_best),
            r.fe_used.to_string(),
            r.best_digest.clone(),
        ];
        row.extend(r.fitness.iter().map(|&f| fmt(f)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings_csv<W: Write>(out: W, records: &[GenerationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["generation", "wall_seconds", "fe_used"])?;
    for r in records {
        w.write_record([r.generation.to_string(), fmt(r.wall_seconds), r.fe_used.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
