//! Canonical serialization, hashing, and seed derivation.
//!
//! Everything that ends up hashed or written to disk goes through
//! [`canonical_json_bytes`]: a JSON document with lexicographically sorted
//! keys, no whitespace, numbers in shortest round-trip decimal form, and
//! byte arrays hex-encoded lowercase. One encoding shared by the ledger,
//! the config loader, and the metrics exporter keeps hashes and files
//! reproducible byte for byte.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// Serializes `value` into canonical JSON bytes.
///
/// The value is first converted to a `serde_json::Value`, whose object
/// representation is a sorted map, then written compactly. serde_json's
/// float formatting is shortest round-trip by construction.
pub fn canonical_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, serde_json::Error> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string(&v)?.into_bytes())
}

/// SHA-256 of a byte slice.
pub fn sha256(data: &[u8]) -> Hash32 {
    let digest = Sha256::digest(data);
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    Hash32(out)
}

/// SHA-256 over the canonical JSON form of `value`.
pub fn hash_canonical<T: Serialize>(value: &T) -> Result<Hash32, serde_json::Error> {
    Ok(sha256(&canonical_json_bytes(value)?))
}

/// A 32-byte digest, serialized as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hash32(pub [u8; 32]);

impl Hash32 {
    pub const ZERO: Hash32 = Hash32([0u8; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Parses lowercase hex only: uppercase digits would give a second
    /// spelling of the same value, breaking canonical-form uniqueness.
    pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
        if let Some(pos) = s.bytes().position(|b| b.is_ascii_uppercase()) {
            return Err(hex::FromHexError::InvalidHexCharacter {
                c: s.as_bytes()[pos] as char,
                index: pos,
            });
        }
        let bytes = hex::decode(s)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| hex::FromHexError::InvalidStringLength)?;
        Ok(Hash32(arr))
    }
}

impl std::fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Hash32({})", self.to_hex())
    }
}

impl std::fmt::Display for Hash32 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Hash32 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Hash32 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Hash32::from_hex(&s).map_err(|e| D::Error::custom(format!("bad hash hex: {e}")))
    }
}

/// Derives the seed for client `client_id` in round `round`:
/// SHA-256(master_seed_be8 || client_id_utf8 || round_be8), first 8 bytes
/// read big-endian.
pub fn derive_client_round_seed(master_seed: u64, client_id: &str, round: u64) -> u64 {
    derive_seed_from_parts(&[
        &master_seed.to_be_bytes(),
        client_id.as_bytes(),
        &round.to_be_bytes(),
    ])
}

/// Same derivation with a domain tag appended, for independent per-purpose
/// streams (noise draws, data splits) that must not reuse the training seed.
pub fn derive_tagged_seed(master_seed: u64, client_id: &str, round: u64, tag: &str) -> u64 {
    derive_seed_from_parts(&[
        &master_seed.to_be_bytes(),
        client_id.as_bytes(),
        &round.to_be_bytes(),
        tag.as_bytes(),
    ])
}

/// Seed for a named experiment-global stream (e.g. the network simulator).
pub fn derive_stream_seed(master_seed: u64, stream: &str) -> u64 {
    derive_seed_from_parts(&[&master_seed.to_be_bytes(), stream.as_bytes()])
}

fn derive_seed_from_parts(parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p);
    }
    let digest = hasher.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(first)
}
