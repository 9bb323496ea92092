//! Injects an install record into Chrome and Firefox store fixtures and
//! shows that the auditor flags it against the pre-injection baseline.
//!
//! ```bash
//! cargo run -p extcheck --example store_audit
//! ```

use extcheck::package::derive_extension_id;
use extcheck::storeaudit::{
    audit_chrome_prefs, audit_firefox_db, chrome_ids, create_firefox_fixture, firefox_ids, inject_chrome_entry,
    inject_firefox_entry, ChromeManifestSummary, ChromeStoreEntry, FirefoxStoreEntry,
};

fn chrome_entry(seed: &[u8], location: i64) -> Result<ChromeStoreEntry, extcheck::PackageError> {
    Ok(ChromeStoreEntry {
        id: derive_extension_id(seed)?,
        path: "1.0_0".into(),
        location,
        state: 1,
        from_webstore: true,
        manifest: ChromeManifestSummary { name: "Helper".into(), version: "1.0".into() },
    })
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clean = inject_chrome_entry(r#"{"browser":{"has_seen_welcome_page":true}}"#, &chrome_entry(b"legit", 1)?)?;
    let baseline = chrome_ids(&clean)?;
    println!("chrome clean: {:?}", audit_chrome_prefs(&clean, Some(&baseline))?);

    let dirty = inject_chrome_entry(&clean, &chrome_entry(b"injected", 1)?)?;
    for f in audit_chrome_prefs(&dirty, Some(&baseline))? {
        println!("chrome: {} {:?} ({})", f.entry_id, f.reason, f.details);
    }

    let tmp = tempfile::tempdir()?;
    let db = tmp.path().join("extensions.sqlite");
    create_firefox_fixture(&db)?;
    std::fs::create_dir(tmp.path().join("extensions"))?;
    let addon = |id: &str, descriptor: &str| FirefoxStoreEntry {
        id: id.into(),
        location: "app-profile".into(),
        version: "3.1".into(),
        active: true,
        descriptor: descriptor.into(),
    };
    inject_firefox_entry(&db, &addon("reader@example.org", "extensions"))?;
    let baseline = firefox_ids(&db)?;
    inject_firefox_entry(&db, &addon("{6b3f0c1e-0000-4000-8000-000000000001}", "extensions/missing.xpi"))?;
    for f in audit_firefox_db(&db, Some(&baseline))? {
        println!("firefox: {} {:?} ({})", f.entry_id, f.reason, f.details);
    }
    Ok(())
}
