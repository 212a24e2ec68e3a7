//! Framework-level permission model: application manifests, install-time
//! permission granting, intent delivery checks, API permission checks, and
//! revocable per-URI grants.
//!
//! Decisions here are label-based and sit above the kernel's DAC layer; a
//! call may pass these checks and still be refused by the kernel, and vice
//! versa. [`check_file_access`] bridges to the DAC layer for callers that
//! want a policy-shaped answer about a file.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::kernel::{check_dac, Access, FileMode};
use crate::model::{ComponentRef, Credential, Layer, FIRST_APP_UID};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AsfError {
    #[error("app {0:?} is already installed")]
    DuplicateApp(String),
    #[error("user declined the requested permissions; install aborted")]
    InstallAborted,
}

/// Static permission declaration shipped with an application package.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub app: String,
    /// Permissions this package defines for others to request.
    #[serde(default)]
    pub declared: BTreeSet<String>,
    /// Permissions this package asks to hold.
    #[serde(default)]
    pub requested: BTreeSet<String>,
}

impl Manifest {
    pub fn new(app: impl Into<String>) -> Self {
        Self {
            app: app.into(),
            declared: BTreeSet::new(),
            requested: BTreeSet::new(),
        }
    }

    pub fn declaring<S: Into<String>>(mut self, perms: impl IntoIterator<Item = S>) -> Self {
        self.declared.extend(perms.into_iter().map(Into::into));
        self
    }

    pub fn requesting<S: Into<String>>(mut self, perms: impl IntoIterator<Item = S>) -> Self {
        self.requested.extend(perms.into_iter().map(Into::into));
        self
    }
}

/// An installed application: its allocated identity plus the permissions it
/// holds. Grants are fixed at install time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstalledApp {
    pub app: String,
    pub uid: u32,
    pub gid: u32,
    pub granted: BTreeSet<String>,
    pub declared: BTreeSet<String>,
}

impl InstalledApp {
    pub fn credential(&self) -> Credential {
        Credential::new(self.uid, self.gid)
    }

    pub fn component(&self) -> ComponentRef {
        ComponentRef::new(&self.app, Layer::A)
    }
}

/// Allocates app identities and records install-time grants.
///
/// Granting is all-or-nothing: the user either accepts every requested
/// permission or the install aborts. There is no partial grant and no
/// post-install escalation path through this table.
#[derive(Debug, Clone, Default)]
pub struct PackageInstaller {
    installed: BTreeMap<String, InstalledApp>,
    allocated: u32,
}

impl PackageInstaller {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn install(&mut self, manifest: &Manifest, accept: bool) -> Result<InstalledApp, AsfError> {
        if self.installed.contains_key(&manifest.app) {
            return Err(AsfError::DuplicateApp(manifest.app.clone()));
        }
        if !accept {
            return Err(AsfError::InstallAborted);
        }
        let uid = FIRST_APP_UID + self.allocated;
        self.allocated += 1;
        let app = InstalledApp {
            app: manifest.app.clone(),
            uid,
            gid: uid,
            granted: manifest.requested.clone(),
            declared: manifest.declared.clone(),
        };
        self.installed.insert(manifest.app.clone(), app.clone());
        Ok(app)
    }

    pub fn lookup(&self, app: &str) -> Option<&InstalledApp> {
        self.installed.get(app)
    }

    pub fn installed(&self) -> impl Iterator<Item = &InstalledApp> {
        self.installed.values()
    }
}

/// Outcome of a policy check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum PolicyDecision {
    Allow,
    Deny { reason: String },
}

impl PolicyDecision {
    pub fn deny(reason: impl Into<String>) -> Self {
        PolicyDecision::Deny {
            reason: reason.into(),
        }
    }

    pub fn is_allow(&self) -> bool {
        matches!(self, PolicyDecision::Allow)
    }
}

/// Checks whether a sender holding `sender_granted` may deliver an intent to
/// a component protected by `required`. Every required permission must be
/// held; the denial names the first missing one in lexicographic order.
pub fn check_intent_delivery(
    sender_granted: &BTreeSet<String>,
    required: &BTreeSet<String>,
) -> PolicyDecision {
    for perm in required {
        if !sender_granted.contains(perm) {
            return PolicyDecision::deny(format!("missing-permission:{perm}"));
        }
    }
    PolicyDecision::Allow
}

/// Checks a guarded framework API: the caller must hold `required` or the
/// call is refused with a security exception.
pub fn check_api_permission(caller_granted: &BTreeSet<String>, required: &str) -> PolicyDecision {
    if caller_granted.contains(required) {
        PolicyDecision::Allow
    } else {
        PolicyDecision::deny("security-exception")
    }
}

/// Fans an intent out to a set of recipients, each protected by its own
/// required-permission set. Recipients are checked independently: a denial
/// for one never affects delivery to another.
pub fn deliver_intent(
    sender_granted: &BTreeSet<String>,
    recipients: &[(ComponentRef, BTreeSet<String>)],
) -> Vec<(ComponentRef, PolicyDecision)> {
    recipients
        .iter()
        .map(|(component, required)| {
            (
                component.clone(),
                check_intent_delivery(sender_granted, required),
            )
        })
        .collect()
}

/// Access mode attached to a URI grant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UriMode {
    Read,
    Write,
    ReadWrite,
}

impl UriMode {
    /// Least upper bound: granting read and write separately is the same as
    /// granting both at once.
    pub fn join(self, other: UriMode) -> UriMode {
        if self == other {
            self
        } else {
            UriMode::ReadWrite
        }
    }

    /// Whether a grant of `self` covers a request for `wanted`.
    pub fn satisfies(self, wanted: UriMode) -> bool {
        self == UriMode::ReadWrite || self == wanted
    }
}

/// Dynamic, revocable per-URI permissions, keyed by (grantee uid, uri).
///
/// These exist alongside the static manifest grants: content owners can
/// extend temporary access to single documents without the grantee holding
/// any manifest permission.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UriGrantTable {
    grants: BTreeMap<(u32, String), UriMode>,
}

impl UriGrantTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn grant(&mut self, grantee_uid: u32, uri: &str, mode: UriMode) {
        self.grants
            .entry((grantee_uid, uri.to_string()))
            .and_modify(|m| *m = m.join(mode))
            .or_insert(mode);
    }

    /// Removes the grant entirely, regardless of mode.
    pub fn revoke(&mut self, grantee_uid: u32, uri: &str) {
        self.grants.remove(&(grantee_uid, uri.to_string()));
    }

    pub fn check(&self, grantee_uid: u32, uri: &str, wanted: UriMode) -> PolicyDecision {
        match self.grants.get(&(grantee_uid, uri.to_string())) {
            Some(mode) if mode.satisfies(wanted) => PolicyDecision::Allow,
            _ => PolicyDecision::deny("no-uri-grant"),
        }
    }

    pub fn clear(&mut self) {
        self.grants.clear();
    }

    pub fn len(&self) -> usize {
        self.grants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grants.is_empty()
    }
}

/// Policy-shaped view of a kernel DAC check, with the root override the
/// kernel applies at dispatch time.
pub fn check_file_access(cred: &Credential, file: &FileMode, access: Access) -> PolicyDecision {
    if cred.is_root() || check_dac(cred, file, access) {
        PolicyDecision::Allow
    } else {
        PolicyDecision::deny("dac-denied")
    }
}
