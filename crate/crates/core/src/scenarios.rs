//! Scripted end-to-end scenarios over a booted system: the standard
//! application launch, a direct malicious fork over the zygote socket, the
//! fork flood, the reboot-loop attack, and a GPS position query.
//!
//! Every scenario is deterministic: same configuration in, same report out.

use serde::{Deserialize, Serialize};

use crate::asf::{check_api_permission, InstalledApp, Manifest, PackageInstaller, UriGrantTable};
use crate::kernel::{BootHook, FileMode, KernelState, SysError};
use crate::model::{
    components, flow_signature, Call, CallEvent, ComponentRef, Credential, EventFactory, Flow,
    Outcome, SYSTEM_UID,
};
use crate::zygote::{ForkCmd, ForkResult, Zygote, ZygoteError, WITH_FRAMEWORK};

pub const ZYGOTE_SOCKET: &str = "zygote";
pub const VOLD_SOCKET: &str = "vold";
pub const ACCESS_FINE_LOCATION: &str = "android.permission.ACCESS_FINE_LOCATION";

/// Tunable parameters of a simulated device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    /// Whether the zygote socket ships with the hardened ownership and mode.
    pub patched: bool,
    /// Process memory units available in total.
    pub memory_capacity: u64,
    /// Reboots within one attack after which the device counts as
    /// boot-looping.
    pub boot_loop_threshold: u32,
    /// Memory units one process occupies.
    pub process_cost: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            patched: false,
            memory_capacity: 256,
            boot_loop_threshold: 3,
            process_cost: 1,
        }
    }
}

impl SystemConfig {
    /// Ownership and mode of the zygote socket. Unpatched devices ship it
    /// root-owned and world-writable; the patch moves the group to system
    /// and drops the world bits.
    pub fn zygote_socket_perm(&self) -> FileMode {
        if self.patched {
            FileMode::new(0, SYSTEM_UID, 0o660)
        } else {
            FileMode::new(0, 0, 0o666)
        }
    }

    /// Returns this configuration with the zygote socket fix applied.
    /// Idempotent.
    pub fn apply_patch(&self) -> SystemConfig {
        SystemConfig {
            patched: true,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Zygote(#[from] ZygoteError),
    #[error(transparent)]
    Asf(#[from] crate::asf::AsfError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Kernel(#[from] SysError),
}

/// A booted device: kernel, zygote, installer, and grant table.
#[derive(Debug)]
pub struct World {
    pub config: SystemConfig,
    pub kernel: KernelState,
    pub factory: EventFactory,
    pub installer: PackageInstaller,
    pub zygote: Zygote,
    pub uri_grants: UriGrantTable,
    pub init_pid: u32,
    pub zygote_pid: u32,
    pub system_server_pid: u32,
}

impl World {
    /// Boots a device: init, zygote and the system server come up, the
    /// zygote and vold sockets are created, and the resulting state is
    /// sealed as the reboot baseline.
    pub fn boot(config: &SystemConfig) -> Result<World, ScenarioError> {
        let mut kernel = KernelState::new(config.memory_capacity, config.process_cost);
        let init_pid = kernel.spawn_boot_process(Credential::root(), "init")?;
        let zygote_cred = Zygote::new(0).cred;
        let zygote_pid = kernel.spawn_boot_process(zygote_cred, "zygote")?;
        let system_server_pid =
            kernel.spawn_boot_process(Credential::system(), "ServerThread")?;
        kernel.create_socket(ZYGOTE_SOCKET, config.zygote_socket_perm())?;
        kernel.create_socket(VOLD_SOCKET, FileMode::new(0, 0, 0o660))?;
        kernel.connect_socket(VOLD_SOCKET, "volddaemon")?;
        kernel.seal_baseline();
        Ok(World {
            config: config.clone(),
            kernel,
            factory: EventFactory::new(),
            installer: PackageInstaller::new(),
            zygote: Zygote::new(zygote_pid),
            uri_grants: UriGrantTable::new(),
            init_pid,
            zygote_pid,
            system_server_pid,
        })
    }

    pub fn install(&mut self, manifest: &Manifest) -> Result<InstalledApp, ScenarioError> {
        Ok(self.installer.install(manifest, true)?)
    }

    /// Applies the zygote socket fix to a running device and re-seals the
    /// baseline so the fix survives reboots. Idempotent.
    pub fn apply_patch(&mut self) -> Result<(), ScenarioError> {
        self.config.patched = true;
        self.kernel
            .set_socket_perm(ZYGOTE_SOCKET, self.config.zygote_socket_perm())?;
        self.kernel.seal_baseline();
        Ok(())
    }

    /// Per-reboot housekeeping outside the kernel: dynamic URI grants do
    /// not survive a reboot.
    fn note_reboot(&mut self) {
        self.uri_grants.clear();
    }
}

/// One refused or failed step of a scenario. `index` is the flow step for
/// launch, malicious and gps runs, the repetition number for flood runs,
/// and the attack cycle for boot attack runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Denial {
    pub index: usize,
    pub reason: String,
}

impl Denial {
    fn new(index: usize, reason: impl Into<String>) -> Self {
        Self {
            index,
            reason: reason.into(),
        }
    }
}

/// Outcome of one scenario run. `flow` holds the representative call
/// chain: the whole flow for single-shot scenarios, the first repetition's
/// chain for flood and boot attack runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub flow: Flow,
    pub signature: String,
    pub final_process_count: usize,
    pub reboot_count: u32,
    pub boot_looped: bool,
    pub denials: Vec<Denial>,
}

/// The named scenarios the command line exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Launch,
    Malicious,
    Flood,
    Bootloop,
    Gps,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Launch,
        Scenario::Malicious,
        Scenario::Flood,
        Scenario::Bootloop,
        Scenario::Gps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Launch => "launch",
            Scenario::Malicious => "malicious",
            Scenario::Flood => "flood",
            Scenario::Bootloop => "bootloop",
            Scenario::Gps => "gps",
        }
    }

    pub fn parse(name: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|s| s.name() == name)
    }
}

pub fn run_scenario(
    scenario: Scenario,
    config: &SystemConfig,
) -> Result<ScenarioReport, ScenarioError> {
    match scenario {
        Scenario::Launch => run_launch(config, true),
        Scenario::Malicious => run_malicious(config),
        Scenario::Flood => {
            // Enough repetitions to exhaust memory from any baseline.
            let reps = config.memory_capacity / config.process_cost.max(1) + 2;
            run_fork_flood(config, reps as usize)
        }
        Scenario::Bootloop => run_boot_attack(config),
        Scenario::Gps => run_gps(config, true),
    }
}

/// Fork commands needed to exhaust memory from a fresh boot holding
/// `baseline_used` units: every fork costs `cost`, and the first one that
/// no longer fits is the one that fails.
pub fn forks_to_exhaustion(capacity: u64, baseline_used: u64, cost: u64) -> u64 {
    assert!(cost > 0);
    capacity.saturating_sub(baseline_used) / cost + 1
}

enum ChainOutcome {
    /// The socket refused the write; nothing reached the zygote.
    SendRefused(String),
    /// The zygote handled the command.
    Completed(ForkResult),
    /// The fork itself failed in the kernel.
    ForkFailed(String),
}

/// Sends one fork command and lets the zygote service it. When `events` is
/// given, the socket, jni and sys steps are recorded onto it as a chain
/// continuing from its last event.
fn drive_fork(
    world: &mut World,
    source: &ComponentRef,
    caller: &Credential,
    cmd: &ForkCmd,
    pending_app: Option<&str>,
    mut events: Option<&mut Vec<CallEvent>>,
) -> Result<ChainOutcome, ScenarioError> {
    let payload = cmd.to_payload();
    let send = world
        .kernel
        .socket_send(caller, ZYGOTE_SOCKET, payload.clone());
    if let Some(events) = events.as_mut() {
        let parent = events.last().map(|e| e.event_id);
        let mut e = world.factory.make_event(
            source.clone(),
            components::zygote_process(),
            Call::Socket {
                id: ZYGOTE_SOCKET.to_string(),
                m: payload.clone(),
            },
            caller.clone(),
            parent,
        );
        e.set_outcome(match &send {
            Ok(()) => Outcome::Allowed,
            Err(err) => Outcome::Denied {
                reason: err.to_string(),
            },
        });
        events.push(e);
    }
    if let Err(err) = send {
        return Ok(ChainOutcome::SendRefused(err.to_string()));
    }

    let result = world
        .zygote
        .service_one(&mut world.kernel, pending_app)
        .expect("fork command was queued above");
    let (fork_outcome, chain) = match result {
        Ok(ForkResult::Rejected { rule }) => {
            // Refused before the native fork; no deeper steps happened.
            return Ok(ChainOutcome::Completed(ForkResult::Rejected { rule }));
        }
        Ok(res) => (ChainOutcome::Completed(res), Ok(())),
        Err(ZygoteError::Kernel(err)) => {
            world.note_reboot();
            (ChainOutcome::ForkFailed(err.to_string()), Err(err))
        }
        Err(other) => return Err(other.into()),
    };

    if let Some(events) = events.as_mut() {
        let zygote_cred = world.zygote.cred.clone();
        let parent = events.last().map(|e| e.event_id);
        let mut jni = world.factory.make_event(
            components::zygote_process(),
            components::zygote_library(),
            Call::Jni {
                mtd: "ForkAndSpecialize".to_string(),
                obj: payload,
            },
            zygote_cred.clone(),
            parent,
        );
        jni.set_outcome(Outcome::Allowed);
        let jni_id = jni.event_id;
        events.push(jni);

        let mut sys = world.factory.make_event(
            components::zygote_library(),
            components::kernel(),
            Call::Sys {
                id: "fork".to_string(),
                args: vec![],
            },
            zygote_cred,
            Some(jni_id),
        );
        sys.set_outcome(match &chain {
            Ok(()) => Outcome::Allowed,
            Err(err) => Outcome::Failed {
                reason: err.to_string(),
            },
        });
        let sys_id = sys.event_id;
        events.push(sys);

        if let ChainOutcome::Completed(ForkResult::KilledSelf { .. }) = &fork_outcome {
            let child_cred = Credential::new(
                cmd.requested_uid.unwrap_or(0),
                cmd.requested_gid.unwrap_or(0),
            );
            let mut kill = world.factory.make_event(
                components::kernel(),
                components::kernel(),
                Call::Sys {
                    id: "kill".to_string(),
                    args: vec![serde_json::json!("self")],
                },
                child_cred,
                Some(sys_id),
            );
            kill.set_outcome(Outcome::Allowed);
            events.push(kill);
        }
    }
    Ok(fork_outcome)
}

fn finish_report(
    scenario: Scenario,
    world: &World,
    events: Vec<CallEvent>,
    denials: Vec<Denial>,
    boot_looped: bool,
) -> Result<ScenarioReport, ScenarioError> {
    let flow = Flow::try_new(events)?;
    let signature = flow_signature(&flow)?;
    Ok(ScenarioReport {
        scenario: scenario.name().to_string(),
        flow,
        signature,
        final_process_count: world.kernel.process_count(),
        reboot_count: world.kernel.reboot_count(),
        boot_looped,
        denials,
    })
}

/// The sanctioned cold launch: the app asks the Activity Manager, which
/// commands the zygote over its socket; the zygote forks and specializes
/// an `ActivityThread` child. With no application available to bind, the
/// child kills itself and the flow gains that final step.
pub fn run_launch(
    config: &SystemConfig,
    app_available: bool,
) -> Result<ScenarioReport, ScenarioError> {
    let mut world = World::boot(config)?;
    let app = world.install(&Manifest::new("AL"))?;
    let mut events = Vec::new();
    let mut denials = Vec::new();

    let mut e = world.factory.make_event(
        components::launching_app(),
        components::activity_manager(),
        Call::binder_action("StartActivity"),
        app.credential(),
        None,
    );
    e.set_outcome(Outcome::Allowed);
    events.push(e);

    let cmd = ForkCmd::app_launch(app.uid, app.gid);
    let pending = if app_available { Some(app.app.as_str()) } else { None };
    let outcome = drive_fork(
        &mut world,
        &components::activity_manager(),
        &Credential::system(),
        &cmd,
        pending,
        Some(&mut events),
    )?;
    match outcome {
        ChainOutcome::Completed(ForkResult::Rejected { rule }) => {
            denials.push(Denial::new(events.len() - 1, rule.reason()));
        }
        ChainOutcome::SendRefused(code) | ChainOutcome::ForkFailed(code) => {
            denials.push(Denial::new(events.len() - 1, code));
        }
        ChainOutcome::Completed(_) => {}
    }
    finish_report(Scenario::Launch, &world, events, denials, false)
}

/// An app writes a fork command to the zygote socket directly, skipping the
/// Activity Manager. On an unpatched device this plants an idle
/// root-credentialed child; the patch stops the write at the socket.
pub fn run_malicious(config: &SystemConfig) -> Result<ScenarioReport, ScenarioError> {
    let mut world = World::boot(config)?;
    let mal = world.install(&Manifest::new("MalApp"))?;
    let mut events = Vec::new();
    let mut denials = Vec::new();

    let outcome = drive_fork(
        &mut world,
        &ComponentRef::new(mal.app.clone(), crate::model::Layer::A),
        &mal.credential(),
        &ForkCmd::bare(WITH_FRAMEWORK),
        None,
        Some(&mut events),
    )?;
    match outcome {
        ChainOutcome::Completed(ForkResult::Rejected { rule }) => {
            denials.push(Denial::new(events.len() - 1, rule.reason()));
        }
        ChainOutcome::SendRefused(code) | ChainOutcome::ForkFailed(code) => {
            denials.push(Denial::new(events.len() - 1, code));
        }
        ChainOutcome::Completed(_) => {}
    }
    finish_report(Scenario::Malicious, &world, events, denials, false)
}

enum CycleEnd {
    /// Memory ran out at this 0-based repetition and the device rebooted.
    Rebooted { failed_rep: usize },
    /// The socket (or a policy rule) stopped the attack at this repetition.
    Blocked { rep: usize, reason: String },
    /// The repetition budget ran out without a reboot or refusal.
    Exhausted,
}

/// Repeats the malicious fork up to `max_reps` times, stopping early when
/// the device reboots or the attack is blocked. Records the first
/// repetition's chain when `events` is given.
fn flood_cycle(
    world: &mut World,
    source: &ComponentRef,
    caller: &Credential,
    max_reps: usize,
    mut events: Option<&mut Vec<CallEvent>>,
) -> Result<CycleEnd, ScenarioError> {
    let cmd = ForkCmd::bare(WITH_FRAMEWORK);
    for rep in 0..max_reps {
        let recorded = if rep == 0 { events.as_deref_mut() } else { None };
        match drive_fork(world, source, caller, &cmd, None, recorded)? {
            ChainOutcome::SendRefused(reason) => {
                return Ok(CycleEnd::Blocked { rep, reason });
            }
            ChainOutcome::Completed(ForkResult::Rejected { rule }) => {
                return Ok(CycleEnd::Blocked {
                    rep,
                    reason: rule.reason().to_string(),
                });
            }
            ChainOutcome::ForkFailed(_) => {
                return Ok(CycleEnd::Rebooted { failed_rep: rep });
            }
            ChainOutcome::Completed(_) => {}
        }
    }
    Ok(CycleEnd::Exhausted)
}

/// The fork flood: malicious forks repeated until the repetition budget is
/// spent or process memory runs out and the device reboots. The denial
/// records the repetition that was refused or failed; an uneventful run
/// records none.
pub fn run_fork_flood(
    config: &SystemConfig,
    repetitions: usize,
) -> Result<ScenarioReport, ScenarioError> {
    assert!(repetitions >= 1, "a flood needs at least one repetition");
    let mut world = World::boot(config)?;
    let mal = world.install(&Manifest::new("MalApp"))?;
    let source = ComponentRef::new(mal.app.clone(), crate::model::Layer::A);
    let caller = mal.credential();
    let mut events = Vec::new();
    let mut denials = Vec::new();

    match flood_cycle(&mut world, &source, &caller, repetitions, Some(&mut events))? {
        CycleEnd::Rebooted { failed_rep } => {
            denials.push(Denial::new(failed_rep, SysError::EnomemReboot.to_string()));
        }
        CycleEnd::Blocked { rep, reason } => {
            denials.push(Denial::new(rep, reason));
        }
        CycleEnd::Exhausted => {}
    }
    finish_report(Scenario::Flood, &world, events, denials, false)
}

/// The reboot-loop attack: the flood runs once after install, and a boot
/// hook re-runs it on every following boot. The device counts as
/// boot-looping once the reboot count reaches the configured threshold.
/// Each denial is indexed by attack cycle.
pub fn run_boot_attack(config: &SystemConfig) -> Result<ScenarioReport, ScenarioError> {
    let mut world = World::boot(config)?;
    let mal = world.install(&Manifest::new("MalApp"))?;
    let source = ComponentRef::new(mal.app.clone(), crate::model::Layer::A);
    let caller = mal.credential();
    world.kernel.register_boot_hook(BootHook::MaliciousFlood);
    // Generous per-cycle budget; an unpatched cycle reboots well within it.
    let cycle_reps = (config.memory_capacity / config.process_cost.max(1) + 2) as usize;
    let mut events = Vec::new();
    let mut denials = Vec::new();

    match flood_cycle(&mut world, &source, &caller, cycle_reps, Some(&mut events))? {
        CycleEnd::Rebooted { .. } => {
            denials.push(Denial::new(0, SysError::EnomemReboot.to_string()));
        }
        CycleEnd::Blocked { reason, .. } => {
            denials.push(Denial::new(0, reason));
        }
        CycleEnd::Exhausted => {}
    }

    let mut cycle = 1;
    while world.kernel.reboot_count() < world.config.boot_loop_threshold {
        let Some(hook) = world.kernel.take_pending_hook() else {
            break;
        };
        match hook {
            BootHook::MaliciousFlood => {
                match flood_cycle(&mut world, &source, &caller, cycle_reps, None)? {
                    CycleEnd::Rebooted { .. } => {
                        denials.push(Denial::new(cycle, SysError::EnomemReboot.to_string()));
                    }
                    CycleEnd::Blocked { reason, .. } => {
                        denials.push(Denial::new(cycle, reason));
                        break;
                    }
                    CycleEnd::Exhausted => break,
                }
            }
        }
        cycle += 1;
    }

    let reboots = world.kernel.reboot_count();
    let boot_looped = reboots > 0 && reboots >= world.config.boot_loop_threshold;
    finish_report(Scenario::Bootloop, &world, events, denials, boot_looped)
}

/// A position query through the Location Manager. The API check guards the
/// first step; without the location permission the flow ends there with a
/// security exception.
pub fn run_gps(config: &SystemConfig, granted: bool) -> Result<ScenarioReport, ScenarioError> {
    let mut world = World::boot(config)?;
    let manifest = if granted {
        Manifest::new("App").requesting([ACCESS_FINE_LOCATION])
    } else {
        Manifest::new("App")
    };
    let app = world.install(&manifest)?;
    let mut events = Vec::new();
    let mut denials = Vec::new();

    let decision = check_api_permission(&app.granted, ACCESS_FINE_LOCATION);
    let mut e = world.factory.make_event(
        ComponentRef::new(app.app.clone(), crate::model::Layer::A),
        components::location_manager(),
        Call::binder_action("getLastKnownLocation"),
        app.credential(),
        None,
    );
    match decision {
        crate::asf::PolicyDecision::Allow => e.set_outcome(Outcome::Allowed),
        crate::asf::PolicyDecision::Deny { reason } => {
            e.set_outcome(Outcome::Denied {
                reason: reason.clone(),
            });
            denials.push(Denial::new(0, reason));
            events.push(e);
            return finish_report(Scenario::Gps, &world, events, denials, false);
        }
    }
    events.push(e);

    let system = Credential::system();
    let push_allowed = |world: &mut World,
                            events: &mut Vec<CallEvent>,
                            src: ComponentRef,
                            dst: ComponentRef,
                            call: Call| {
        let parent = events.last().map(|e| e.event_id);
        let mut e = world
            .factory
            .make_event(src, dst, call, system.clone(), parent);
        e.set_outcome(Outcome::Allowed);
        events.push(e);
    };
    push_allowed(
        &mut world,
        &mut events,
        components::location_manager(),
        components::gps_provider(),
        Call::Func {
            id: "requestLocation".to_string(),
            args: vec![],
        },
    );
    push_allowed(
        &mut world,
        &mut events,
        components::gps_provider(),
        components::gps_provider_native(),
        Call::Jni {
            mtd: "native_getLocation".to_string(),
            obj: crate::model::Payload::Null,
        },
    );
    push_allowed(
        &mut world,
        &mut events,
        components::gps_provider_native(),
        components::gps_library(),
        Call::Dl {
            id: "libgps.so".to_string(),
        },
    );

    let sys_result = world
        .kernel
        .dispatch_syscall(&system, "ioctl", &[serde_json::json!("/dev/gps")]);
    let parent = events.last().map(|e| e.event_id);
    let mut e = world.factory.make_event(
        components::gps_library(),
        components::kernel_driver(),
        Call::Sys {
            id: "ioctl".to_string(),
            args: vec![serde_json::json!("/dev/gps")],
        },
        system,
        parent,
    );
    match sys_result {
        Ok(()) => e.set_outcome(Outcome::Allowed),
        Err(err) => {
            e.set_outcome(Outcome::Failed {
                reason: err.to_string(),
            });
            denials.push(Denial::new(events.len(), err.to_string()));
        }
    }
    events.push(e);

    finish_report(Scenario::Gps, &world, events, denials, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults() {
        let c = SystemConfig::default();
        assert!(!c.patched);
        assert_eq!(c.memory_capacity, 256);
        assert_eq!(c.boot_loop_threshold, 3);
        assert_eq!(c.process_cost, 1);
    }

    #[test]
    fn partial_config_json_fills_defaults() {
        let c: SystemConfig = serde_json::from_str(r#"{"patched": true}"#).unwrap();
        assert!(c.patched);
        assert_eq!(c.memory_capacity, 256);
        let c: SystemConfig = serde_json::from_str(r#"{"memory_capacity": 8}"#).unwrap();
        assert_eq!(c.memory_capacity, 8);
        assert!(!c.patched);
    }

    #[test]
    fn socket_perm_follows_the_patch_flag() {
        let unpatched = SystemConfig::default().zygote_socket_perm();
        assert_eq!((unpatched.owner_uid, unpatched.group_gid), (0, 0));
        assert_eq!(unpatched.octal(), "666");
        let patched = SystemConfig {
            patched: true,
            ..Default::default()
        }
        .zygote_socket_perm();
        assert_eq!((patched.owner_uid, patched.group_gid), (0, 1000));
        assert_eq!(patched.octal(), "660");
    }

    #[test]
    fn exhaustion_formula_examples() {
        assert_eq!(forks_to_exhaustion(256, 3, 1), 254);
        assert_eq!(forks_to_exhaustion(3, 3, 1), 1);
        assert_eq!(forks_to_exhaustion(10, 3, 2), 4);
        assert_eq!(forks_to_exhaustion(11, 3, 2), 5);
    }

    #[test]
    fn boot_brings_up_three_processes_and_two_sockets() {
        let world = World::boot(&SystemConfig::default()).unwrap();
        assert_eq!(world.kernel.process_count(), 3);
        assert_eq!(world.init_pid, 1);
        assert_eq!(world.zygote_pid, 2);
        assert_eq!(world.system_server_pid, 3);
        assert_eq!(
            world.kernel.process(3).unwrap().thread_name,
            "ServerThread"
        );
        assert!(world.kernel.socket(ZYGOTE_SOCKET).is_some());
        assert!(world
            .kernel
            .socket(VOLD_SOCKET)
            .unwrap()
            .connected_peer
            .is_some());
        assert!(world.kernel.baseline_sealed());
    }

    #[test]
    fn patch_persists_across_reboots() {
        let mut world = World::boot(&SystemConfig::default()).unwrap();
        world.apply_patch().unwrap();
        world.apply_patch().unwrap();
        world.kernel.reboot();
        let perm = &world.kernel.socket(ZYGOTE_SOCKET).unwrap().perm;
        assert_eq!(perm.octal(), "660");
        assert_eq!(perm.group_gid, 1000);
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::parse(s.name()), Some(s));
        }
        assert_eq!(Scenario::parse("nope"), None);
    }

    #[test]
    fn uri_grants_do_not_survive_a_reboot() {
        let mut world = World::boot(&SystemConfig::default()).unwrap();
        world
            .uri_grants
            .grant(10000, "content://docs/1", crate::asf::UriMode::Read);
        assert_eq!(world.uri_grants.len(), 1);
        world.kernel.reboot();
        world.note_reboot();
        assert!(world.uri_grants.is_empty());
    }

    #[test]
    fn apply_patch_is_idempotent() {
        let once = SystemConfig::default().apply_patch();
        assert!(once.patched);
        assert_eq!(once.apply_patch(), once);
        assert_eq!(once.zygote_socket_perm().octal(), "660");
    }

    #[test]
    fn launch_with_app_binds_in_four_steps() {
        let report = run_launch(&SystemConfig::default(), true).unwrap();
        assert_eq!(
            report.signature,
            "AL_A --binder(StartActivity)--> AM_AF; \
             AM_AF --socket(zygote)--> ZP_AR; \
             ZP_AR --jni(ForkAndSpecialize)--> ZL_L; \
             ZL_L --sys(fork)--> Kernel_K"
        );
        assert_eq!(report.flow.events.len(), 4);
        assert!(report.denials.is_empty());
        assert_eq!(report.final_process_count, 4);
        assert_eq!(report.reboot_count, 0);
    }

    #[test]
    fn launch_without_app_ends_in_self_kill() {
        let report = run_launch(&SystemConfig::default(), false).unwrap();
        assert_eq!(report.flow.events.len(), 5);
        assert!(report.signature.ends_with("Kernel_K --sys(kill)--> Kernel_K"));
        assert_eq!(report.final_process_count, 3);
    }

    #[test]
    fn launch_reports_match_across_the_patch() {
        let unpatched = run_launch(&SystemConfig::default(), true).unwrap();
        let patched = run_launch(&SystemConfig::default().apply_patch(), true).unwrap();
        assert_eq!(unpatched, patched);
    }

    #[test]
    fn malicious_fork_plants_one_process_and_skips_the_framework() {
        let report = run_malicious(&SystemConfig::default()).unwrap();
        assert_eq!(
            report.signature,
            "MalApp_A --socket(zygote)--> ZP_AR; \
             ZP_AR --jni(ForkAndSpecialize)--> ZL_L; \
             ZL_L --sys(fork)--> Kernel_K"
        );
        assert!(report.denials.is_empty());
        assert_eq!(report.final_process_count, 4);
        assert!(!report.signature.contains("_AF"));
    }

    #[test]
    fn patched_socket_stops_the_malicious_fork() {
        let report = run_malicious(&SystemConfig::default().apply_patch()).unwrap();
        assert_eq!(report.denials, vec![Denial::new(0, "EACCES")]);
        assert_eq!(report.final_process_count, 3);
        assert_eq!(report.flow.events.len(), 1);
    }

    #[test]
    fn flood_reboots_at_the_predicted_fork() {
        let config = SystemConfig {
            memory_capacity: 16,
            ..Default::default()
        };
        let report = run_fork_flood(&config, 200).unwrap();
        // Boot uses 3 units; the 14th fork is the one that no longer fits.
        let expected = forks_to_exhaustion(16, 3, 1);
        assert_eq!(expected, 14);
        assert_eq!(report.denials.len(), 1);
        assert_eq!(report.denials[0].index as u64, expected - 1);
        assert_eq!(report.denials[0].reason, "ENOMEM-REBOOT");
        assert_eq!(report.reboot_count, 1);
        assert_eq!(report.final_process_count, 3);
    }

    #[test]
    fn short_flood_with_ample_capacity_never_reboots() {
        let report = run_fork_flood(&SystemConfig::default(), 1).unwrap();
        assert_eq!(report.reboot_count, 0);
        assert!(report.denials.is_empty());
        assert_eq!(report.final_process_count, 4);
    }

    #[test]
    fn patched_flood_forks_nothing() {
        let report = run_fork_flood(&SystemConfig::default().apply_patch(), 200).unwrap();
        assert_eq!(report.reboot_count, 0);
        assert_eq!(report.final_process_count, 3);
        assert_eq!(report.denials, vec![Denial::new(0, "EACCES")]);
    }

    #[test]
    fn boot_attack_loops_until_the_threshold() {
        let config = SystemConfig {
            memory_capacity: 16,
            ..Default::default()
        };
        let report = run_boot_attack(&config).unwrap();
        assert!(report.boot_looped);
        assert_eq!(report.reboot_count, 3);
        assert_eq!(report.denials.len(), 3);
        assert!(report
            .denials
            .iter()
            .enumerate()
            .all(|(i, d)| d.index == i && d.reason == "ENOMEM-REBOOT"));
    }

    #[test]
    fn boot_attack_with_threshold_one_stops_after_the_first_reboot() {
        let config = SystemConfig {
            memory_capacity: 16,
            boot_loop_threshold: 1,
            ..Default::default()
        };
        let report = run_boot_attack(&config).unwrap();
        assert!(report.boot_looped);
        assert_eq!(report.reboot_count, 1);
    }

    #[test]
    fn patched_boot_attack_never_reboots() {
        let report = run_boot_attack(&SystemConfig::default().apply_patch()).unwrap();
        assert!(!report.boot_looped);
        assert_eq!(report.reboot_count, 0);
        assert_eq!(report.denials, vec![Denial::new(0, "EACCES")]);
    }

    #[test]
    fn gps_query_walks_all_five_layers() {
        let report = run_gps(&SystemConfig::default(), true).unwrap();
        assert_eq!(
            report.signature,
            "App_A --binder(getLastKnownLocation)--> LMS_AF; \
             LMS_AF --func(requestLocation)--> GLP_AF; \
             GLP_AF --jni(native_getLocation)--> GLP_L; \
             GLP_L --dl(libgps.so)--> GL_L; \
             GL_L --sys(ioctl)--> KD_K"
        );
        assert!(report.denials.is_empty());
        assert_eq!(report.flow.events.len(), 5);
    }

    #[test]
    fn gps_query_without_permission_stops_at_the_binder_step() {
        let report = run_gps(&SystemConfig::default(), false).unwrap();
        assert_eq!(report.flow.events.len(), 1);
        assert_eq!(report.denials, vec![Denial::new(0, "security-exception")]);
    }

    #[test]
    fn gps_runs_are_deterministic() {
        let a = run_gps(&SystemConfig::default(), true).unwrap();
        let b = run_gps(&SystemConfig::default(), true).unwrap();
        assert_eq!(a.signature, b.signature);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
