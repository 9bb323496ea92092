//! CRX container headers.
//!
//! ```text
//! CRX2: "Cr24" | u32 version=2 | u32 key_len | u32 sig_len | key | sig | zip
//! CRX3: "Cr24" | u32 version=3 | u32 header_len | header | zip
//! ```
//!
//! All integers are little-endian. The CRX3 header is a protobuf blob that is
//! skipped by length.

use super::{ContainerKind, PackageError};

pub const CRX_MAGIC: &[u8; 4] = b"Cr24";
pub const ZIP_MAGIC: &[u8; 4] = b"PK\x03\x04";

/// Parsed fixed portion of a CRX file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrxHeader {
    pub version: u32,
    /// DER-encoded public key (CRX2 only, empty for CRX3).
    pub public_key: Vec<u8>,
    /// Signature bytes (CRX2 only, empty for CRX3).
    pub signature: Vec<u8>,
    /// Byte offset of the embedded ZIP archive.
    pub zip_offset: usize,
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32, PackageError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(PackageError::TruncatedHeader)
}

/// Classifies a container from its leading bytes.
pub fn detect_container(leading: &[u8], is_directory: bool) -> Result<ContainerKind, PackageError> {
    if is_directory {
        return Ok(ContainerKind::Directory);
    }
    if leading.starts_with(CRX_MAGIC) {
        return match read_u32(leading, 4) {
            Ok(2) => Ok(ContainerKind::Crx2),
            Ok(3) => Ok(ContainerKind::Crx3),
            Ok(other) => Err(PackageError::BadVersion(other)),
            Err(_) => Err(PackageError::UnknownContainer),
        };
    }
    if leading.starts_with(ZIP_MAGIC) {
        return Ok(ContainerKind::Zip);
    }
    Err(PackageError::UnknownContainer)
}

pub fn parse_crx_header(bytes: &[u8]) -> Result<CrxHeader, PackageError> {
    if !bytes.starts_with(CRX_MAGIC) {
        return Err(PackageError::UnknownContainer);
    }
    let version = read_u32(bytes, 4)?;
    match version {
        2 => {
            let key_len = read_u32(bytes, 8)? as usize;
            let sig_len = read_u32(bytes, 12)? as usize;
            let key_end = 16usize
                .checked_add(key_len)
                .ok_or(PackageError::TruncatedHeader)?;
            let zip_offset = key_end
                .checked_add(sig_len)
                .ok_or(PackageError::TruncatedHeader)?;
            if zip_offset > bytes.len() {
                return Err(PackageError::TruncatedHeader);
            }
            Ok(CrxHeader {
                version,
                public_key: bytes[16..key_end].to_vec(),
                signature: bytes[key_end..zip_offset].to_vec(),
                zip_offset,
            })
        }
        3 => {
            let header_len = read_u32(bytes, 8)? as usize;
            let zip_offset = 12usize
                .checked_add(header_len)
                .ok_or(PackageError::TruncatedHeader)?;
            if zip_offset > bytes.len() {
                return Err(PackageError::TruncatedHeader);
            }
            Ok(CrxHeader {
                version,
                public_key: Vec::new(),
                signature: Vec::new(),
                zip_offset,
            })
        }
        other => Err(PackageError::BadVersion(other)),
    }
}
