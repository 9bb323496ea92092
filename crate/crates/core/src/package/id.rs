use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::PackageError;

/// Length of a Chrome extension ID.
pub const ID_LEN: usize = 32;

/// A 32-character extension identifier over the alphabet `a`..=`p`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExtensionId(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid extension id {0:?}: expected 32 characters in a-p")]
pub struct InvalidId(pub String);

impl ExtensionId {
    pub fn parse(text: &str) -> Result<Self, InvalidId> {
        if is_valid_id(text) {
            Ok(Self(text.to_owned()))
        } else {
            Err(InvalidId(text.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub fn is_valid_id(text: &str) -> bool {
    text.len() == ID_LEN && text.bytes().all(|b| (b'a'..=b'p').contains(&b))
}

impl FromStr for ExtensionId {
    type Err = InvalidId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for ExtensionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ExtensionId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for ExtensionId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ExtensionId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Derives the extension ID from the DER-encoded public key: the first 16
/// bytes of its SHA-256, hex encoded, with each hex digit shifted onto `a`..=`p`.
pub fn derive_extension_id(public_key: &[u8]) -> Result<ExtensionId, PackageError> {
    if public_key.is_empty() {
        return Err(PackageError::EmptyKey);
    }
    let digest = Sha256::digest(public_key);
    let mut id = String::with_capacity(ID_LEN);
    for byte in &digest[..16] {
        id.push(char::from(b'a' + (byte >> 4)));
        id.push(char::from(b'a' + (byte & 0x0f)));
    }
    Ok(ExtensionId(id))
}
