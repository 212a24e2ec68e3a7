//! Simulated Linux kernel: process table, named sockets with permission
//! bits, discretionary access control, memory accounting with a reboot on
//! exhaustion, and the syscall dispatch used by trace replay.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::{Credential, Payload};

/// The system calls the simulated kernel accepts by name, sorted.
pub const SYSCALL_REGISTRY: &[&str] = &[
    "bind",
    "close",
    "connect",
    "exit",
    "exit_group",
    "getpid",
    "gettid",
    "ioctl",
    "kill",
    "lseek",
    "lstat64",
    "mkdir",
    "open",
    "prctl",
    "read",
    "recvfrom",
    "recvmsg",
    "sendmsg",
    "sendto",
    "socket",
    "write",
];

pub fn is_known_syscall(name: &str) -> bool {
    SYSCALL_REGISTRY.binary_search(&name).is_ok()
}

/// Error codes surfaced by the simulated kernel. `Display` renders the bare
/// code so callers can embed it in outcomes verbatim.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SysError {
    /// Caller may not act on the target process.
    #[error("EPERM")]
    Eperm,
    /// Permission bits refuse the access.
    #[error("EACCES")]
    Eacces,
    /// No such process or socket.
    #[error("ENOENT")]
    Enoent,
    /// A socket with that name is already bound.
    #[error("EADDRINUSE")]
    Eaddrinuse,
    /// The socket already has a connected endpoint.
    #[error("EISCONN")]
    Eisconn,
    /// Process memory is exhausted; the kernel has rebooted.
    #[error("ENOMEM-REBOOT")]
    EnomemReboot,
    /// Syscall name outside the registry.
    #[error("ENOSYS")]
    Enosys { name: String },
}

impl SysError {
    pub fn code(&self) -> &'static str {
        match self {
            SysError::Eperm => "EPERM",
            SysError::Eacces => "EACCES",
            SysError::Enoent => "ENOENT",
            SysError::Eaddrinuse => "EADDRINUSE",
            SysError::Eisconn => "EISCONN",
            SysError::EnomemReboot => "ENOMEM-REBOOT",
            SysError::Enosys { .. } => "ENOSYS",
        }
    }
}

/// Requested access direction for a permission check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Access {
    Read,
    Write,
    Execute,
}

impl Access {
    pub const ALL: [Access; 3] = [Access::Read, Access::Write, Access::Execute];

    fn bit(self) -> u16 {
        match self {
            Access::Read => 4,
            Access::Write => 2,
            Access::Execute => 1,
        }
    }
}

/// Ownership and permission bits of a file-like kernel object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileMode {
    pub owner_uid: u32,
    pub group_gid: u32,
    /// Classic three-digit octal mode, e.g. `0o666`.
    pub mode: u16,
}

impl FileMode {
    pub fn new(owner_uid: u32, group_gid: u32, mode: u16) -> Self {
        assert!(mode <= 0o777, "mode {mode:o} has bits outside rwxrwxrwx");
        Self {
            owner_uid,
            group_gid,
            mode,
        }
    }

    pub fn octal(&self) -> String {
        format!("{:03o}", self.mode)
    }
}

/// Pure discretionary access control check, without any root override.
///
/// The caller is classified once, first match wins: owner if the uid
/// matches, else group if the gid or a supplementary group matches, else
/// other. Only the digit for that class is consulted, so an owner whose
/// owner digit lacks the bit is refused even when the other digit would
/// admit everyone else.
pub fn check_dac(cred: &Credential, file: &FileMode, access: Access) -> bool {
    let digit = if cred.uid == file.owner_uid {
        (file.mode >> 6) & 0o7
    } else if cred.in_group(file.group_gid) {
        (file.mode >> 3) & 0o7
    } else {
        file.mode & 0o7
    };
    digit & access.bit() != 0
}

/// DAC check as the kernel applies it at dispatch: root bypasses the bits.
pub fn dac_allows(cred: &Credential, file: &FileMode, access: Access) -> bool {
    cred.is_root() || check_dac(cred, file, access)
}

/// A process table entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessRecord {
    pub pid: u32,
    pub cred: Credential,
    pub thread_name: String,
    /// Application bound into this process, when specialization attached one.
    pub bound_app: Option<String>,
    pub memory_cost: u64,
    pub parent_pid: Option<u32>,
}

/// A named kernel socket with an owner, permission bits, and a message
/// queue. Messages keep the sender's credential so a receiver could check
/// who is talking; nothing forces it to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocketNode {
    pub id: String,
    pub perm: FileMode,
    pub queue: VecDeque<(Credential, Payload)>,
    /// Set when the socket is part of an established connection.
    pub connected_peer: Option<String>,
}

/// Action queued to run on every boot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootHook {
    MaliciousFlood,
}

#[derive(Debug, Clone)]
struct Baseline {
    processes: BTreeMap<u32, ProcessRecord>,
    sockets: BTreeMap<String, SocketNode>,
    memory_used: u64,
    next_pid: u32,
}

/// Whole-kernel state for one simulated device.
#[derive(Debug)]
pub struct KernelState {
    processes: BTreeMap<u32, ProcessRecord>,
    sockets: BTreeMap<String, SocketNode>,
    memory_capacity: u64,
    memory_used: u64,
    process_cost: u64,
    pub factory_test_mode: bool,
    reboot_count: u32,
    /// Actions re-armed on every reboot, in registration order.
    boot_hooks: Vec<BootHook>,
    pending_hooks: VecDeque<BootHook>,
    next_pid: u32,
    baseline: Option<Baseline>,
}

impl KernelState {
    pub fn new(memory_capacity: u64, process_cost: u64) -> Self {
        assert!(process_cost > 0, "process cost must be positive");
        Self {
            processes: BTreeMap::new(),
            sockets: BTreeMap::new(),
            memory_capacity,
            memory_used: 0,
            process_cost,
            factory_test_mode: false,
            reboot_count: 0,
            boot_hooks: Vec::new(),
            pending_hooks: VecDeque::new(),
            next_pid: 1,
            baseline: None,
        }
    }

    pub fn memory_capacity(&self) -> u64 {
        self.memory_capacity
    }

    pub fn memory_used(&self) -> u64 {
        self.memory_used
    }

    pub fn process_cost(&self) -> u64 {
        self.process_cost
    }

    pub fn reboot_count(&self) -> u32 {
        self.reboot_count
    }

    pub fn process_count(&self) -> usize {
        self.processes.len()
    }

    pub fn process(&self, pid: u32) -> Option<&ProcessRecord> {
        self.processes.get(&pid)
    }

    pub fn processes(&self) -> impl Iterator<Item = &ProcessRecord> {
        self.processes.values()
    }

    pub fn socket(&self, id: &str) -> Option<&SocketNode> {
        self.sockets.get(id)
    }

    pub fn register_boot_hook(&mut self, hook: BootHook) {
        self.boot_hooks.push(hook);
    }

    pub fn take_pending_hook(&mut self) -> Option<BootHook> {
        self.pending_hooks.pop_front()
    }

    fn alloc_process(
        &mut self,
        cred: Credential,
        thread_name: &str,
        bound_app: Option<String>,
        parent_pid: Option<u32>,
        cost: u64,
    ) -> Result<u32, SysError> {
        if self.memory_used + cost > self.memory_capacity {
            // Out of process memory. On a sealed (fully booted) system the
            // device reboots; during boot construction the failure is
            // reported without the reboot side effect.
            if self.baseline.is_some() {
                self.reboot();
            }
            return Err(SysError::EnomemReboot);
        }
        let pid = self.next_pid;
        self.next_pid += 1;
        self.memory_used += cost;
        self.processes.insert(
            pid,
            ProcessRecord {
                pid,
                cred,
                thread_name: thread_name.to_string(),
                bound_app,
                memory_cost: cost,
                parent_pid,
            },
        );
        Ok(pid)
    }

    /// Creates a process during boot, before any baseline exists. Costs
    /// the configured default per-process amount.
    pub fn spawn_boot_process(
        &mut self,
        cred: Credential,
        thread_name: &str,
    ) -> Result<u32, SysError> {
        let cost = self.process_cost;
        self.alloc_process(cred, thread_name, None, None, cost)
    }

    /// Forks a child of `parent_pid`, charging `cost` memory units. The
    /// child inherits the parent's credential unless `child_cred` overrides
    /// it; whether an override is legitimate is the caller's concern. Fails
    /// with `ENOMEM-REBOOT` (rebooting the device) when process memory is
    /// exhausted.
    pub fn sys_fork(
        &mut self,
        parent_pid: u32,
        child_cred: Option<Credential>,
        thread_name: &str,
        bound_app: Option<String>,
        cost: u64,
    ) -> Result<u32, SysError> {
        let Some(parent) = self.processes.get(&parent_pid) else {
            return Err(SysError::Enoent);
        };
        let cred = child_cred.unwrap_or_else(|| parent.cred.clone());
        self.alloc_process(cred, thread_name, bound_app, Some(parent_pid), cost)
    }

    /// Kill permission: root may signal anything, otherwise the caller's
    /// uid must match the target's.
    pub fn sys_kill(&mut self, caller: &Credential, target_pid: u32) -> Result<(), SysError> {
        let target = self.processes.get(&target_pid).ok_or(SysError::Enoent)?;
        if !caller.is_root() && caller.uid != target.cred.uid {
            return Err(SysError::Eperm);
        }
        let record = self.processes.remove(&target_pid).expect("target looked up above");
        self.memory_used -= record.memory_cost;
        Ok(())
    }

    pub fn create_socket(&mut self, id: &str, perm: FileMode) -> Result<(), SysError> {
        if self.sockets.contains_key(id) {
            return Err(SysError::Eaddrinuse);
        }
        self.sockets.insert(
            id.to_string(),
            SocketNode {
                id: id.to_string(),
                perm,
                queue: VecDeque::new(),
                connected_peer: None,
            },
        );
        Ok(())
    }

    pub fn connect_socket(&mut self, id: &str, peer: &str) -> Result<(), SysError> {
        let node = self.sockets.get_mut(id).ok_or(SysError::Enoent)?;
        node.connected_peer = Some(peer.to_string());
        Ok(())
    }

    pub fn set_socket_perm(&mut self, id: &str, perm: FileMode) -> Result<(), SysError> {
        let node = self.sockets.get_mut(id).ok_or(SysError::Enoent)?;
        node.perm = perm;
        Ok(())
    }

    /// Writes a message to a named socket. The write is gated by the
    /// socket's permission bits (root bypasses them); the sender's
    /// credential travels with the message.
    pub fn socket_send(
        &mut self,
        caller: &Credential,
        id: &str,
        message: Payload,
    ) -> Result<(), SysError> {
        let node = self.sockets.get_mut(id).ok_or(SysError::Enoent)?;
        if !dac_allows(caller, &node.perm, Access::Write) {
            return Err(SysError::Eacces);
        }
        node.queue.push_back((caller.clone(), message));
        Ok(())
    }

    pub fn socket_recv(&mut self, id: &str) -> Option<(Credential, Payload)> {
        self.sockets.get_mut(id)?.queue.pop_front()
    }

    /// Freezes the current state as the post-boot baseline that a reboot
    /// restores.
    pub fn seal_baseline(&mut self) {
        self.baseline = Some(Baseline {
            processes: self.processes.clone(),
            sockets: self.sockets.clone(),
            memory_used: self.memory_used,
            next_pid: self.next_pid,
        });
    }

    pub fn baseline_sealed(&self) -> bool {
        self.baseline.is_some()
    }

    /// Restores the post-boot baseline, drops all queued socket messages,
    /// bumps the reboot counter, and re-arms every registered boot hook.
    pub fn reboot(&mut self) {
        let base = self
            .baseline
            .as_ref()
            .expect("reboot requires a sealed baseline");
        self.processes = base.processes.clone();
        self.sockets = base.sockets.clone();
        self.memory_used = base.memory_used;
        self.next_pid = base.next_pid;
        for node in self.sockets.values_mut() {
            node.queue.clear();
        }
        self.reboot_count += 1;
        self.pending_hooks.extend(self.boot_hooks.iter().copied());
    }

    /// Executes one named system call the way trace replay sees it: most
    /// registry calls are state-preserving successes, and three interact
    /// with kernel objects that can refuse them.
    pub fn dispatch_syscall(
        &mut self,
        caller: &Credential,
        name: &str,
        args: &[Payload],
    ) -> Result<(), SysError> {
        match name {
            "bind" => {
                // Binding a name that some live socket already holds fails;
                // an unaddressed bind has nothing to collide with.
                match args.first().and_then(|v| v.as_str()) {
                    Some(id) if self.sockets.contains_key(id) => Err(SysError::Eaddrinuse),
                    _ => Ok(()),
                }
            }
            "kill" => {
                let pid = args
                    .first()
                    .and_then(|v| v.as_u64())
                    .and_then(|p| u32::try_from(p).ok())
                    .ok_or(SysError::Enoent)?;
                self.sys_kill(caller, pid)
            }
            "sendto" => match args.first().and_then(|v| v.as_str()) {
                Some(id) => {
                    let node = self.sockets.get(id).ok_or(SysError::Enoent)?;
                    if node.connected_peer.is_some() {
                        Err(SysError::Eisconn)
                    } else {
                        Ok(())
                    }
                }
                None => Ok(()),
            },
            _ if is_known_syscall(name) => Ok(()),
            _ => Err(SysError::Enosys {
                name: name.to_string(),
            }),
        }
    }

    /// Deterministic serializable view of the kernel: processes sorted by
    /// pid, sockets sorted by id with queue lengths in place of contents.
    pub fn snapshot(&self) -> KernelSnapshot {
        KernelSnapshot {
            processes: self.processes.values().cloned().collect(),
            sockets: self
                .sockets
                .values()
                .map(|s| SocketSummary {
                    id: s.id.clone(),
                    perm: s.perm.clone(),
                    queue_len: s.queue.len(),
                    connected_peer: s.connected_peer.clone(),
                })
                .collect(),
            memory_capacity: self.memory_capacity,
            memory_used: self.memory_used,
            reboot_count: self.reboot_count,
            factory_test_mode: self.factory_test_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocketSummary {
    pub id: String,
    pub perm: FileMode,
    pub queue_len: usize,
    pub connected_peer: Option<String>,
}

/// Point-in-time view of a [`KernelState`], suitable for JSON comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSnapshot {
    pub processes: Vec<ProcessRecord>,
    pub sockets: Vec<SocketSummary>,
    pub memory_capacity: u64,
    pub memory_used: u64,
    pub reboot_count: u32,
    pub factory_test_mode: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn world_socket() -> FileMode {
        FileMode::new(0, 0, 0o666)
    }

    fn guarded_socket() -> FileMode {
        FileMode::new(0, 1000, 0o660)
    }

    #[test]
    fn registry_is_sorted_and_has_21_entries() {
        assert_eq!(SYSCALL_REGISTRY.len(), 21);
        let mut sorted = SYSCALL_REGISTRY.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, SYSCALL_REGISTRY);
        assert!(is_known_syscall("ioctl"));
        assert!(!is_known_syscall("fork"));
    }

    #[test]
    fn dac_classifies_owner_group_other() {
        let file = guarded_socket();
        assert!(check_dac(&Credential::root(), &file, Access::Write));
        assert!(check_dac(&Credential::system(), &file, Access::Write));
        assert!(!check_dac(&Credential::app(10000), &file, Access::Write));
        assert!(check_dac(&Credential::app(10000), &world_socket(), Access::Write));
    }

    #[test]
    fn dac_first_match_pins_the_owner_to_the_owner_digit() {
        let file = FileMode::new(10, 20, 0o066);
        let owner = Credential::new(10, 99);
        assert!(!check_dac(&owner, &file, Access::Read));
        let stranger = Credential::new(11, 99);
        assert!(check_dac(&stranger, &file, Access::Read));
    }

    #[test]
    fn supplementary_groups_reach_the_group_digit() {
        let file = FileMode::new(0, 1000, 0o660);
        let member = Credential::new(10000, 10000).with_groups([1000]);
        assert!(check_dac(&member, &file, Access::Write));
    }

    #[test]
    fn execute_bit_is_separate() {
        let file = FileMode::new(0, 0, 0o644);
        let other = Credential::app(10000);
        assert!(check_dac(&other, &file, Access::Read));
        assert!(!check_dac(&other, &file, Access::Write));
        assert!(!check_dac(&other, &file, Access::Execute));
    }

    #[test]
    fn root_override_lives_in_dispatch_not_in_the_bit_check() {
        let file = FileMode::new(1000, 1000, 0o600);
        assert!(!check_dac(&Credential::root(), &file, Access::Write));
        assert!(dac_allows(&Credential::root(), &file, Access::Write));
    }

    fn booted_kernel(capacity: u64) -> KernelState {
        let mut k = KernelState::new(capacity, 1);
        k.spawn_boot_process(Credential::root(), "init").unwrap();
        k.create_socket("zygote", world_socket()).unwrap();
        k.seal_baseline();
        k
    }

    #[test]
    fn socket_send_checks_write_permission() {
        let mut k = booted_kernel(16);
        let app = Credential::app(10000);
        assert_eq!(k.socket_send(&app, "zygote", json!({"n": 1})), Ok(()));
        k.set_socket_perm("zygote", guarded_socket()).unwrap();
        assert_eq!(
            k.socket_send(&app, "zygote", json!({"n": 2})),
            Err(SysError::Eacces)
        );
        assert_eq!(k.socket_send(&Credential::root(), "zygote", json!({"n": 3})), Ok(()));
        assert_eq!(
            k.socket_send(&app, "nope", json!(0)),
            Err(SysError::Enoent)
        );
    }

    #[test]
    fn socket_messages_carry_the_sender_credential() {
        let mut k = booted_kernel(16);
        let app = Credential::app(10007);
        k.socket_send(&app, "zygote", json!("hello")).unwrap();
        let (cred, msg) = k.socket_recv("zygote").unwrap();
        assert_eq!(cred.uid, 10007);
        assert_eq!(msg, json!("hello"));
        assert!(k.socket_recv("zygote").is_none());
    }

    #[test]
    fn kill_requires_root_or_same_uid() {
        let mut k = booted_kernel(16);
        let victim = k
            .sys_fork(1, Some(Credential::app(10000)), "victim", None, 1)
            .unwrap();
        assert_eq!(
            k.sys_kill(&Credential::app(10001), victim),
            Err(SysError::Eperm)
        );
        assert_eq!(k.sys_kill(&Credential::app(10000), victim), Ok(()));
        assert_eq!(
            k.sys_kill(&Credential::app(10000), victim),
            Err(SysError::Enoent)
        );
        let victim2 = k
            .sys_fork(1, Some(Credential::app(10000)), "victim", None, 1)
            .unwrap();
        assert_eq!(k.sys_kill(&Credential::root(), victim2), Ok(()));
    }

    #[test]
    fn fork_exhaustion_reboots_to_the_baseline() {
        let mut k = booted_kernel(3);
        assert_eq!(k.process_count(), 1);
        k.sys_fork(1, None, "d1", None, 1).unwrap();
        k.sys_fork(1, None, "d2", None, 1).unwrap();
        let err = k.sys_fork(1, None, "d3", None, 1).unwrap_err();
        assert_eq!(err, SysError::EnomemReboot);
        assert_eq!(k.reboot_count(), 1);
        assert_eq!(k.process_count(), 1);
        assert_eq!(k.memory_used(), 1);
    }

    #[test]
    fn fork_inherits_the_parent_credential_by_default() {
        let mut k = booted_kernel(8);
        let parent = k
            .sys_fork(1, Some(Credential::app(10003)), "parent", None, 1)
            .unwrap();
        let child = k.sys_fork(parent, None, "child", None, 1).unwrap();
        assert_eq!(k.process(child).unwrap().cred, Credential::app(10003));
        assert_eq!(k.process(child).unwrap().parent_pid, Some(parent));
    }

    #[test]
    fn oversized_fork_cost_trips_the_reboot() {
        let mut k = booted_kernel(100);
        for n in 0..98 {
            k.sys_fork(1, None, &format!("f{n}"), None, 1).unwrap();
        }
        assert_eq!(k.memory_used(), 99);
        let err = k.sys_fork(1, None, "big", None, 2).unwrap_err();
        assert_eq!(err, SysError::EnomemReboot);
        assert_eq!(k.reboot_count(), 1);
    }

    #[test]
    fn snapshots_list_processes_in_pid_order() {
        let mut k = booted_kernel(8);
        k.sys_fork(1, Some(Credential::app(10001)), "b", None, 1)
            .unwrap();
        k.sys_fork(1, Some(Credential::app(10000)), "a", None, 1)
            .unwrap();
        let snap = k.snapshot();
        let pids: Vec<u32> = snap.processes.iter().map(|p| p.pid).collect();
        let mut sorted = pids.clone();
        sorted.sort_unstable();
        assert_eq!(pids, sorted);
        assert_eq!(snap.memory_used, 3);
        let json = serde_json::to_string(&snap).unwrap();
        assert_eq!(json, serde_json::to_string(&k.snapshot()).unwrap());
    }

    #[test]
    fn kill_releases_memory() {
        let mut k = booted_kernel(8);
        let pid = k
            .sys_fork(1, Some(Credential::app(10000)), "x", None, 1)
            .unwrap();
        assert_eq!(k.memory_used(), 2);
        k.sys_kill(&Credential::root(), pid).unwrap();
        assert_eq!(k.memory_used(), 1);
    }

    #[test]
    fn reboot_rearms_boot_hooks_and_drops_queues() {
        let mut k = booted_kernel(8);
        k.register_boot_hook(BootHook::MaliciousFlood);
        k.socket_send(&Credential::root(), "zygote", json!("stale"))
            .unwrap();
        k.reboot();
        assert_eq!(k.take_pending_hook(), Some(BootHook::MaliciousFlood));
        assert_eq!(k.take_pending_hook(), None);
        assert!(k.socket_recv("zygote").is_none());
        assert_eq!(k.reboot_count(), 1);
    }

    #[test]
    fn dispatch_plain_calls_succeed() {
        let mut k = booted_kernel(8);
        let app = Credential::app(10000);
        for name in ["close", "getpid", "ioctl", "open", "read", "write", "exit_group"] {
            assert_eq!(k.dispatch_syscall(&app, name, &[]), Ok(()), "{name}");
        }
    }

    #[test]
    fn dispatch_bind_collides_with_live_sockets() {
        let mut k = booted_kernel(8);
        let app = Credential::app(10000);
        assert_eq!(
            k.dispatch_syscall(&app, "bind", &[json!("zygote")]),
            Err(SysError::Eaddrinuse)
        );
        assert_eq!(k.dispatch_syscall(&app, "bind", &[json!("fresh")]), Ok(()));
        assert_eq!(k.dispatch_syscall(&app, "bind", &[json!("fresh")]), Ok(()));
    }

    #[test]
    fn dispatch_sendto_reports_existing_connections() {
        let mut k = booted_kernel(8);
        k.create_socket("vold", guarded_socket()).unwrap();
        k.connect_socket("vold", "volddaemon").unwrap();
        let app = Credential::app(10000);
        assert_eq!(
            k.dispatch_syscall(&app, "sendto", &[json!("vold")]),
            Err(SysError::Eisconn)
        );
        assert_eq!(
            k.dispatch_syscall(&app, "sendto", &[json!("missing")]),
            Err(SysError::Enoent)
        );
        assert_eq!(
            k.dispatch_syscall(&app, "sendto", &[json!("zygote")]),
            Ok(())
        );
    }

    #[test]
    fn dispatch_kill_goes_through_the_permission_check() {
        let mut k = booted_kernel(8);
        let app = Credential::app(10000);
        assert_eq!(
            k.dispatch_syscall(&app, "kill", &[json!(1)]),
            Err(SysError::Eperm)
        );
        assert_eq!(
            k.dispatch_syscall(&app, "kill", &[json!(99)]),
            Err(SysError::Enoent)
        );
    }

    #[test]
    fn dispatch_unknown_name_is_enosys() {
        let mut k = booted_kernel(8);
        let err = k
            .dispatch_syscall(&Credential::root(), "mystery", &[])
            .unwrap_err();
        assert_eq!(err.code(), "ENOSYS");
    }
}
