use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genetic::SecretKey;

pub const KEY_VERSION: u32 = 1;

/// Provenance stored next to the key positions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyMeta {
    pub epsilon: usize,
    pub seed: u64,
    pub generations_run: u32,
    pub final_accuracy: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyDoc {
    version: u32,
    layer: usize,
    n_bit: u32,
    genome_length: usize,
    positions: Vec<u32>,
    #[serde(default)]
    meta: KeyMeta,
}

pub fn key_to_json(key: &SecretKey, meta: &KeyMeta) -> String {
    let doc = KeyDoc {
        version: KEY_VERSION,
        layer: key.layer(),
        n_bit: key.n_bit(),
        genome_length: key.genome_length(),
        positions: key.positions().to_vec(),
        meta: meta.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("key serializes") + "\n"
}

/// Parses a key file. Positions are validated (ascending, unique, in range);
/// a violation names the offending index.
pub fn key_from_json(text: &str) -> Result<(SecretKey, KeyMeta)> {
    #[derive(Deserialize)]
    struct Probe {
        version: u32,
    }
    let probe: Probe = serde_json::from_str(text)?;
    if probe.version != KEY_VERSION {
        return Err(Error::UnsupportedVersion { found: probe.version, supported: KEY_VERSION });
    }
    let doc: KeyDoc = serde_json::from_str(text)?;
    let key = SecretKey::new(doc.layer, doc.n_bit, doc.genome_length, doc.positions)?;
    Ok((key, doc.meta))
}

pub fn save_key(key: &SecretKey, meta: &KeyMeta, path: &Path) -> Result<()> {
    std::fs::write(path, key_to_json(key, meta))?;
    Ok(())
}

pub fn load_key(path: &Path) -> Result<(SecretKey, KeyMeta)> {
    key_from_json(&std::fs::read_to_string(path)?)
}
