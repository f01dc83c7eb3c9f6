//! Hashes and version stamps attached to every output.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::params::ConfigDocument;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the compact JSON form of a config. Field order is fixed by the
/// schema and floats print in shortest round-trip form, so equal configs
/// hash equally.
pub fn config_hash(doc: &ConfigDocument) -> String {
    sha256_hex(&serde_json::to_vec(doc).expect("config serializes"))
}

/// Hash of any serializable value in compact JSON form.
pub fn value_hash<S: Serialize>(value: &S) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("value serializes"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
}

impl Provenance {
    pub fn for_config(doc: &ConfigDocument) -> Self {
        Provenance {
            config_hash: config_hash(doc),
            version: VERSION.to_string(),
        }
    }
}
