use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Parses a config document. Files ending in `.toml` are read as TOML,
/// everything else as JSON. Unknown keys are rejected by the target type.
pub fn parse_config<T: DeserializeOwned>(text: &str, toml_syntax: bool) -> Result<T> {
    if toml_syntax {
        toml::from_str(text).map_err(|e| Error::Validation(format!("config: {}", e.message())))
    } else {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))
    }
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")))
}

/// Lowercase hex SHA-256 of the config's canonical JSON form.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genetic::GaConfig;

    #[test]
    fn json_and_toml_agree() {
        let j: GaConfig = parse_config(r#"{"epsilon": 7, "seed": 3}"#, false).unwrap();
        let t: GaConfig = parse_config("epsilon = 7\nseed = 3\n", true).unwrap();
        assert_eq!(j, t);
        assert_eq!(j.population, GaConfig::default().population);
        assert_eq!(config_hash(&j), config_hash(&t));
        assert_ne!(config_hash(&j), config_hash(&GaConfig::default()));
        assert_eq!(config_hash(&j).len(), 64);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config::<GaConfig>("epsilonn = 7\n", true).is_err());
        assert!(parse_config::<GaConfig>(r#"{"bogus": 1}"#, false).is_err());
    }
}
