use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::manifest::ApiPermission;

pub type PermissionSet = BTreeSet<ApiPermission>;

/// Declared-versus-used comparison of API permissions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverprivilegeResult {
    pub declared: PermissionSet,
    pub used: PermissionSet,
    pub exempt_ignored: PermissionSet,
    pub extra: PermissionSet,
    pub extra_count: usize,
    pub undeclared_used: PermissionSet,
    pub indeterminate: bool,
}

/// `extra = declared - used - exempt`; exempt permissions that were declared
/// and unused are reported in `exempt_ignored` instead.
pub fn compute_overprivilege(
    declared: &PermissionSet,
    used: &PermissionSet,
    exempt: &PermissionSet,
) -> OverprivilegeResult {
    let unused: PermissionSet = declared.difference(used).cloned().collect();
    let exempt_ignored: PermissionSet = unused.intersection(exempt).cloned().collect();
    let extra: PermissionSet = unused.difference(exempt).cloned().collect();
    OverprivilegeResult {
        declared: declared.clone(),
        used: used.clone(),
        exempt_ignored,
        extra_count: extra.len(),
        extra,
        undeclared_used: used.difference(declared).cloned().collect(),
        indeterminate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> PermissionSet {
        names.iter().map(|n| ApiPermission::from(*n)).collect()
    }

    #[test]
    fn notifications_exempt() {
        let r = compute_overprivilege(&set(&["tabs", "cookies", "notifications"]), &set(&["tabs"]), &set(&["notifications"]));
        assert_eq!(r.extra, set(&["cookies"]));
        assert_eq!(r.extra_count, 1);
        assert_eq!(r.exempt_ignored, set(&["notifications"]));
    }

    #[test]
    fn empty() {
        let r = compute_overprivilege(&set(&[]), &set(&[]), &set(&["notifications"]));
        assert_eq!(r, OverprivilegeResult::default());
    }

    #[test]
    fn undeclared_use() {
        let r = compute_overprivilege(&set(&["tabs"]), &set(&["tabs", "cookies"]), &set(&[]));
        assert!(r.extra.is_empty());
        assert_eq!(r.undeclared_used, set(&["cookies"]));
    }

    #[test]
    fn used_exempt_is_not_ignored() {
        let r = compute_overprivilege(&set(&["notifications"]), &set(&["notifications"]), &set(&["notifications"]));
        assert!(r.exempt_ignored.is_empty() && r.extra.is_empty());
    }
}
