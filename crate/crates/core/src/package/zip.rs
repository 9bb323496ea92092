//! Minimal ZIP reader: central directory walk, stored and deflate entries only.

use std::io::Read;

use flate2::read::DeflateDecoder;

use super::PackageError;

const EOCD_SIG: u32 = 0x0605_4b50;
const CDH_SIG: u32 = 0x0201_4b50;
const LFH_SIG: u32 = 0x0403_4b50;
const EOCD_MIN: usize = 22;

const METHOD_STORED: u16 = 0;
const METHOD_DEFLATE: u16 = 8;

/// One archive member, in central-directory order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZipEntry {
    pub name: String,
    pub data: Vec<u8>,
}

fn malformed(msg: impl Into<String>) -> PackageError {
    PackageError::MalformedZip(msg.into())
}

fn u16_at(b: &[u8], at: usize) -> Result<u16, PackageError> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| malformed("unexpected end of archive"))
}

fn u32_at(b: &[u8], at: usize) -> Result<u32, PackageError> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| malformed("unexpected end of archive"))
}

fn find_eocd(archive: &[u8]) -> Result<usize, PackageError> {
    if archive.len() < EOCD_MIN {
        return Err(malformed("archive shorter than end-of-central-directory record"));
    }
    // the record may be followed by a comment of up to 64 KiB
    let lowest = archive.len().saturating_sub(EOCD_MIN + u16::MAX as usize);
    (lowest..=archive.len() - EOCD_MIN)
        .rev()
        .find(|&i| u32_at(archive, i).ok() == Some(EOCD_SIG))
        .ok_or_else(|| malformed("end-of-central-directory record not found"))
}

/// Reads every file member of `archive`. Directory members are skipped.
pub fn read_archive(archive: &[u8]) -> Result<Vec<ZipEntry>, PackageError> {
    let eocd = find_eocd(archive)?;
    let entry_count = u16_at(archive, eocd + 10)? as usize;
    let cd_size = u32_at(archive, eocd + 12)? as usize;
    let cd_offset = u32_at(archive, eocd + 16)? as usize;
    if cd_offset == 0xffff_ffff || entry_count == 0xffff {
        return Err(malformed("zip64 archives are not supported"));
    }
    if cd_offset.checked_add(cd_size).is_none_or(|end| end > eocd) {
        return Err(malformed("central directory out of bounds"));
    }

    let mut entries = Vec::with_capacity(entry_count);
    let mut pos = cd_offset;
    for _ in 0..entry_count {
        if u32_at(archive, pos)? != CDH_SIG {
            return Err(malformed(format!("bad central directory signature at {pos}")));
        }
        let flags = u16_at(archive, pos + 8)?;
        let method = u16_at(archive, pos + 10)?;
        let crc = u32_at(archive, pos + 16)?;
        let compressed = u32_at(archive, pos + 20)? as usize;
        let uncompressed = u32_at(archive, pos + 24)? as usize;
        let name_len = u16_at(archive, pos + 28)? as usize;
        let extra_len = u16_at(archive, pos + 30)? as usize;
        let comment_len = u16_at(archive, pos + 32)? as usize;
        let local_offset = u32_at(archive, pos + 42)? as usize;
        let raw_name = archive
            .get(pos + 46..pos + 46 + name_len)
            .ok_or_else(|| malformed("truncated file name"))?;
        // bit 11: UTF-8 names; otherwise CP437, decoded lossily
        let name = String::from_utf8_lossy(raw_name).into_owned();
        pos += 46 + name_len + extra_len + comment_len;

        if name.ends_with('/') {
            continue;
        }
        if flags & 0x1 != 0 {
            return Err(malformed(format!("{name}: encrypted entries are not supported")));
        }
        if compressed == 0xffff_ffff || uncompressed == 0xffff_ffff || local_offset == 0xffff_ffff {
            return Err(malformed(format!("{name}: zip64 entries are not supported")));
        }

        if u32_at(archive, local_offset)? != LFH_SIG {
            return Err(malformed(format!("{name}: bad local header signature")));
        }
        let local_name_len = u16_at(archive, local_offset + 26)? as usize;
        let local_extra_len = u16_at(archive, local_offset + 28)? as usize;
        let start = local_offset + 30 + local_name_len + local_extra_len;
        let raw = start
            .checked_add(compressed)
            .and_then(|end| archive.get(start..end))
            .ok_or_else(|| malformed(format!("{name}: data runs past end of archive")))?;

        let data = match method {
            METHOD_STORED => raw.to_vec(),
            METHOD_DEFLATE => {
                let mut out = Vec::with_capacity(uncompressed);
                DeflateDecoder::new(raw)
                    .take(uncompressed as u64 + 1)
                    .read_to_end(&mut out)
                    .map_err(|e| malformed(format!("{name}: inflate failed: {e}")))?;
                out
            }
            other => {
                return Err(malformed(format!(
                    "{name}: unsupported compression method {other}"
                )))
            }
        };
        if data.len() != uncompressed {
            return Err(malformed(format!(
                "{name}: size mismatch (expected {uncompressed}, got {})",
                data.len()
            )));
        }
        if crc32fast::hash(&data) != crc {
            return Err(malformed(format!("{name}: crc mismatch")));
        }
        entries.push(ZipEntry { name, data });
    }
    Ok(entries)
}
