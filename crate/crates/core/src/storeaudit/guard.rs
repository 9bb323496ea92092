use std::path::Path;

use super::AuditError;

/// Directory names used by browsers for their profile roots.
const PROFILE_DIR_NAMES: &[&str] = &[
    "user data",
    "google-chrome",
    "google-chrome-beta",
    "google-chrome-unstable",
    "chromium",
    "bravesoftware",
    ".mozilla",
    "mozilla",
    "firefox",
];

/// Files a running or recently used profile leaves behind.
const PROFILE_MARKER_FILES: &[&str] = &["SingletonLock", "Local State", "parent.lock", ".parentlock", "lock", "times.json"];

pub fn looks_like_live_profile(path: &Path) -> bool {
    let abs = if path.is_absolute() {
        path.to_owned()
    } else {
        std::env::current_dir().map(|d| d.join(path)).unwrap_or_else(|_| path.to_owned())
    };
    let named = abs.components().any(|c| {
        let name = c.as_os_str().to_string_lossy().to_ascii_lowercase();
        PROFILE_DIR_NAMES.contains(&name.as_str()) || name.ends_with(".default") || name.ends_with(".default-release")
    });
    if named {
        return true;
    }
    // the store file's directory and its parent (Chrome keeps `Local State`
    // one level above `Default/Preferences`)
    abs.ancestors()
        .skip(1)
        .take(2)
        .any(|dir| PROFILE_MARKER_FILES.iter().any(|m| dir.join(m).exists()))
}

/// Refuses writes to live-looking profiles unless `force` is set.
pub fn check_writable(path: &Path, force: bool) -> Result<(), AuditError> {
    if !force && looks_like_live_profile(path) {
        return Err(AuditError::LiveProfile(path.display().to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_names() {
        assert!(looks_like_live_profile(Path::new("/home/u/.config/google-chrome/Default/Preferences")));
        assert!(looks_like_live_profile(Path::new("C:/Users/u/AppData/Local/Google/Chrome/User Data/Default/Preferences")));
        assert!(looks_like_live_profile(Path::new("/home/u/.mozilla/firefox/abcd.default/extensions.sqlite")));
        assert!(!looks_like_live_profile(Path::new("/tmp/fixtures/Preferences")));
    }

    #[test]
    fn marker_files() {
        let dir = tempfile::tempdir().unwrap();
        let prefs = dir.path().join("Default").join("Preferences");
        std::fs::create_dir_all(prefs.parent().unwrap()).unwrap();
        assert!(!looks_like_live_profile(&prefs));
        std::fs::write(dir.path().join("Local State"), "{}").unwrap();
        assert!(looks_like_live_profile(&prefs));
        assert!(check_writable(&prefs, false).is_err());
        assert!(check_writable(&prefs, true).is_ok());
    }
}
