//! The Zygote spawning protocol: fork commands arriving over the zygote
//! socket, the pre-fork policy rules, and post-fork class specialization.
//!
//! The policy rules gate only what a command explicitly asks for (identity
//! changes, capabilities, debug facilities). A command that asks for none
//! of those sails through to the class checks, which is why reachability of
//! the socket itself carries the whole security burden.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::kernel::{KernelState, SysError};
use crate::model::{Credential, Payload, SYSTEM_UID};

/// Process class the standard launch path specializes into.
pub const ACTIVITY_THREAD: &str = "android.app.ActivityThread";

/// System class with a static `main` that neither binds an application nor
/// exits on its own. Forking it leaves an idle process behind.
pub const WITH_FRAMEWORK: &str = "com.android.internal.util.WithFramework";

/// A fork request as serialized onto the zygote socket.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForkCmd {
    #[serde(rename = "class")]
    pub class_name: String,
    #[serde(rename = "uid", default, skip_serializing_if = "Option::is_none")]
    pub requested_uid: Option<u32>,
    #[serde(rename = "gid", default, skip_serializing_if = "Option::is_none")]
    pub requested_gid: Option<u32>,
    #[serde(rename = "caps", default, skip_serializing_if = "BTreeSet::is_empty")]
    pub requested_caps: BTreeSet<String>,
    #[serde(rename = "debug", default)]
    pub debug_flags: bool,
    #[serde(rename = "rlimits", default, skip_serializing_if = "Option::is_none")]
    pub rlimits: Option<Vec<(String, i64)>>,
}

impl ForkCmd {
    /// A plain fork of `class` requesting no identity change, no
    /// capabilities, and no debug facilities.
    pub fn bare(class: &str) -> Self {
        Self {
            class_name: class.to_string(),
            requested_uid: None,
            requested_gid: None,
            requested_caps: BTreeSet::new(),
            debug_flags: false,
            rlimits: None,
        }
    }

    /// The command the Activity Manager sends to start an app process.
    pub fn app_launch(uid: u32, gid: u32) -> Self {
        Self {
            requested_uid: Some(uid),
            requested_gid: Some(gid),
            ..Self::bare(ACTIVITY_THREAD)
        }
    }

    pub fn to_payload(&self) -> Payload {
        serde_json::to_value(self).expect("fork command serializes")
    }

    pub fn from_payload(payload: &Payload) -> Result<Self, ZygoteError> {
        serde_json::from_value(payload.clone())
            .map_err(|e| ZygoteError::BadCommand(e.to_string()))
    }
}

/// Static properties of a class the zygote may specialize into.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecializeClass {
    pub name: String,
    pub has_static_main: bool,
    pub in_system_package: bool,
    /// Whether specialization attaches a waiting application to the child.
    pub binds_application: bool,
    /// Whether the child exits when no application is attached.
    pub kills_self_without_app: bool,
}

/// Which policy rule or class check refused a fork command. First match
/// wins, in the order the variants are declared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyRule {
    /// uid/gid changes are reserved to root and system callers.
    UidGidRestricted,
    /// Requested capabilities must be a subset of the zygote's own.
    CapsExceedZygote,
    /// Debug flags and rlimits need root or factory test mode.
    DebugRlimitsRestricted,
    /// The class has no static `main` entry point.
    NoStaticMain,
    /// The class lives outside the system package.
    NotSystemPackage,
}

impl PolicyRule {
    pub fn reason(self) -> &'static str {
        match self {
            PolicyRule::UidGidRestricted => "uid-gid-restricted",
            PolicyRule::CapsExceedZygote => "caps-exceed-zygote",
            PolicyRule::DebugRlimitsRestricted => "debug-rlimits-restricted",
            PolicyRule::NoStaticMain => "no-static-main",
            PolicyRule::NotSystemPackage => "not-system-package",
        }
    }
}

/// What became of a fork command that reached the zygote.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum ForkResult {
    /// A child exists. `bound` tells whether an application was attached.
    Forked { child_pid: u32, bound: bool },
    /// A policy rule or class check refused the command; nothing was forked.
    Rejected { rule: PolicyRule },
    /// The child was forked, found no application waiting, and exited.
    KilledSelf { child_pid: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ZygoteError {
    #[error("no class registered under {0:?}")]
    UnknownClass(String),
    #[error("malformed fork command: {0}")]
    BadCommand(String),
    #[error(transparent)]
    Kernel(#[from] SysError),
}

fn default_classes() -> BTreeMap<String, SpecializeClass> {
    let mut classes = BTreeMap::new();
    classes.insert(
        ACTIVITY_THREAD.to_string(),
        SpecializeClass {
            name: ACTIVITY_THREAD.to_string(),
            has_static_main: true,
            in_system_package: true,
            binds_application: true,
            kills_self_without_app: true,
        },
    );
    classes.insert(
        WITH_FRAMEWORK.to_string(),
        SpecializeClass {
            name: WITH_FRAMEWORK.to_string(),
            has_static_main: true,
            in_system_package: true,
            binds_application: false,
            kills_self_without_app: false,
        },
    );
    classes
}

/// The zygote process: a root-credentialed template holding the class
/// registry and a small capability set.
#[derive(Debug, Clone)]
pub struct Zygote {
    pub pid: u32,
    pub cred: Credential,
    classes: BTreeMap<String, SpecializeClass>,
}

impl Zygote {
    pub fn new(pid: u32) -> Self {
        let cred = Credential::root()
            .with_capabilities(["SETGID", "SETUID", "KILL"])
            .expect("registered capability names");
        Self {
            pid,
            cred,
            classes: default_classes(),
        }
    }

    pub fn register_class(&mut self, class: SpecializeClass) {
        self.classes.insert(class.name.clone(), class);
    }

    pub fn class(&self, name: &str) -> Option<&SpecializeClass> {
        self.classes.get(name)
    }

    /// Applies the policy rules and class checks to one fork command and,
    /// when everything passes, forks and specializes the child.
    ///
    /// `caller` is the credential recorded when the command entered the
    /// socket. `pending_app` is the application the Activity Manager has
    /// staged for binding, if any.
    pub fn handle_command(
        &self,
        state: &mut KernelState,
        caller: &Credential,
        cmd: &ForkCmd,
        pending_app: Option<&str>,
    ) -> Result<ForkResult, ZygoteError> {
        if (cmd.requested_uid.is_some() || cmd.requested_gid.is_some())
            && caller.uid != 0
            && caller.uid != SYSTEM_UID
        {
            return Ok(ForkResult::Rejected {
                rule: PolicyRule::UidGidRestricted,
            });
        }
        if !cmd.requested_caps.is_subset(&self.cred.capabilities) {
            return Ok(ForkResult::Rejected {
                rule: PolicyRule::CapsExceedZygote,
            });
        }
        if (cmd.debug_flags || cmd.rlimits.is_some())
            && caller.uid != 0
            && !state.factory_test_mode
        {
            return Ok(ForkResult::Rejected {
                rule: PolicyRule::DebugRlimitsRestricted,
            });
        }

        let class = self
            .classes
            .get(&cmd.class_name)
            .ok_or_else(|| ZygoteError::UnknownClass(cmd.class_name.clone()))?
            .clone();
        if !class.has_static_main {
            return Ok(ForkResult::Rejected {
                rule: PolicyRule::NoStaticMain,
            });
        }
        if !class.in_system_package {
            return Ok(ForkResult::Rejected {
                rule: PolicyRule::NotSystemPackage,
            });
        }

        let child_cred = Credential {
            uid: cmd.requested_uid.unwrap_or(self.cred.uid),
            gid: cmd.requested_gid.unwrap_or(self.cred.gid),
            supplementary_groups: BTreeSet::new(),
            capabilities: cmd.requested_caps.clone(),
        };
        let thread_name = cmd
            .class_name
            .rsplit('.')
            .next()
            .unwrap_or(&cmd.class_name)
            .to_string();
        let binding = class.binds_application && pending_app.is_some();
        let bound_app = if binding {
            pending_app.map(str::to_string)
        } else {
            None
        };
        let cost = state.process_cost();
        let child_pid = state.sys_fork(
            self.pid,
            Some(child_cred.clone()),
            &thread_name,
            bound_app,
            cost,
        )?;

        if binding {
            Ok(ForkResult::Forked {
                child_pid,
                bound: true,
            })
        } else if class.kills_self_without_app {
            state.sys_kill(&child_cred, child_pid)?;
            Ok(ForkResult::KilledSelf { child_pid })
        } else {
            Ok(ForkResult::Forked {
                child_pid,
                bound: false,
            })
        }
    }

    /// Pops one queued command from the zygote socket and handles it with
    /// the credential recorded at send time. Returns `None` when the queue
    /// is empty.
    pub fn service_one(
        &self,
        state: &mut KernelState,
        pending_app: Option<&str>,
    ) -> Option<Result<ForkResult, ZygoteError>> {
        let (caller, payload) = state.socket_recv("zygote")?;
        let cmd = match ForkCmd::from_payload(&payload) {
            Ok(cmd) => cmd,
            Err(e) => return Some(Err(e)),
        };
        Some(self.handle_command(state, &caller, &cmd, pending_app))
    }
}
