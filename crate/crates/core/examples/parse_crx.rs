//! Builds a CRX2 container in memory, then takes it apart again: header
//! fields, payload offset, derived extension id and the unpacked file list.
//!
//! ```bash
//! cargo run -p extcheck --example parse_crx
//! ```

use std::io::{Cursor, Write};

use extcheck::package::{derive_extension_id, detect_container, parse_crx_header, CRX_MAGIC};
use extcheck::ExtensionPackage;
use zip::write::SimpleFileOptions;

fn build_zip() -> zip::result::ZipResult<Vec<u8>> {
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    w.start_file("manifest.json", SimpleFileOptions::default())?;
    w.write_all(br#"{"name":"Packed","version":"2.0","manifest_version":2,"permissions":["storage"]}"#)?;
    w.start_file("js/bg.js", SimpleFileOptions::default())?;
    w.write_all(b"chrome.storage.local.set({seen: true});\n")?;
    Ok(w.finish()?.into_inner())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // stand-ins for a DER public key and its signature
    let key: Vec<u8> = (0..162u32).map(|i| (i * 7 + 3) as u8).collect();
    let sig = vec![0xAB; 128];
    let payload = build_zip()?;

    let mut crx = Vec::new();
    crx.extend_from_slice(CRX_MAGIC);
    for n in [2, key.len() as u32, sig.len() as u32] {
        crx.extend_from_slice(&n.to_le_bytes());
    }
    crx.extend_from_slice(&key);
    crx.extend_from_slice(&sig);
    crx.extend_from_slice(&payload);

    println!("container: {:?}", detect_container(&crx, false)?);
    let header = parse_crx_header(&crx)?;
    println!(
        "version {}, key {} bytes, signature {} bytes, zip at offset {}",
        header.version,
        header.public_key.len(),
        header.signature.len(),
        header.zip_offset
    );
    assert_eq!(&crx[header.zip_offset..], &payload[..]);
    println!("id from key: {}", derive_extension_id(&header.public_key)?);

    let pkg = ExtensionPackage::from_bytes(&crx)?;
    println!("package id: {}", pkg.id().map(|i| i.as_str()).unwrap_or("-"));
    for (name, data) in pkg.files() {
        println!("  {name} ({} bytes)", data.len());
    }
    Ok(())
}
