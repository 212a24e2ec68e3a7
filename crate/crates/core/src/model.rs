//! Core call/flow model: the five stack layers, components, Linux-style
//! credentials, the six inter-layer call kinds, call events, causal flows,
//! and the call-topology classifier.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque structured payload carried by calls (nestable map/list/scalar).
///
/// Security decisions in this model never depend on payload encoding, so a
/// JSON value is a sufficient representation.
pub type Payload = serde_json::Value;

/// UID under which the System Server (and the Activity Manager Service
/// inside it) runs.
pub const SYSTEM_UID: u32 = 1000;

/// First UID handed out to installed applications.
pub const FIRST_APP_UID: u32 = 10000;

/// Fixed registry of capability names a [`Credential`] may hold.
pub const CAPABILITY_REGISTRY: &[&str] = &[
    "CHOWN",
    "DAC_OVERRIDE",
    "FOWNER",
    "IPC_LOCK",
    "KILL",
    "MKNOD",
    "NET_ADMIN",
    "NET_BIND_SERVICE",
    "NET_RAW",
    "SETGID",
    "SETUID",
    "SYS_ADMIN",
    "SYS_BOOT",
    "SYS_MODULE",
    "SYS_NICE",
    "SYS_RESOURCE",
    "SYS_TIME",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("flow is empty")]
    EmptyFlow,
    #[error("event {child} does not chain onto preceding event {expected_parent}")]
    BrokenChain { child: u64, expected_parent: u64 },
    #[error("capability {0:?} is not in the capability registry")]
    UnknownCapability(String),
}

/// One of the five stack layers.
///
/// Variants are declared bottom-up so the derived order gives
/// `K < L < AR < AF < A`; the application layer is the highest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layer {
    /// Linux kernel.
    K,
    /// Native libraries.
    L,
    /// Android runtime.
    AR,
    /// Application framework.
    AF,
    /// Applications.
    A,
}

impl Layer {
    /// All layers, top-down.
    pub const ALL: [Layer; 5] = [Layer::A, Layer::AF, Layer::AR, Layer::L, Layer::K];

    pub fn code(self) -> &'static str {
        match self {
            Layer::A => "A",
            Layer::AF => "AF",
            Layer::AR => "AR",
            Layer::L => "L",
            Layer::K => "K",
        }
    }

    pub fn parse(code: &str) -> Option<Layer> {
        match code {
            "A" => Some(Layer::A),
            "AF" => Some(Layer::AF),
            "AR" => Some(Layer::AR),
            "L" => Some(Layer::L),
            "K" => Some(Layer::K),
            _ => None,
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A named component pinned to a layer. `(name, layer)` pairs are unique
/// within a system configuration; the same name may appear at two layers
/// (e.g. the GPS provider has a framework half and a native half).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentRef {
    pub name: String,
    pub layer: Layer,
}

impl ComponentRef {
    pub fn new(name: impl Into<String>, layer: Layer) -> Self {
        let name = name.into();
        debug_assert!(!name.is_empty(), "component name must be non-empty");
        Self { name, layer }
    }

    /// Rendering used in flow signatures, e.g. `AM_AF`.
    pub fn label(&self) -> String {
        format!("{}_{}", self.name, self.layer)
    }
}

impl fmt::Display for ComponentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.name, self.layer)
    }
}

/// Registry of the named components that appear in the documented flows.
pub mod components {
    use super::{ComponentRef, Layer};

    /// Launching application.
    pub fn launching_app() -> ComponentRef {
        ComponentRef::new("AL", Layer::A)
    }
    /// Activity Manager Service (inside the System Server).
    pub fn activity_manager() -> ComponentRef {
        ComponentRef::new("AM", Layer::AF)
    }
    /// The Zygote socket, a file at kernel level.
    pub fn zygote_socket() -> ComponentRef {
        ComponentRef::new("ZS", Layer::K)
    }
    /// The Zygote process.
    pub fn zygote_process() -> ComponentRef {
        ComponentRef::new("ZP", Layer::AR)
    }
    /// The Zygote native library.
    pub fn zygote_library() -> ComponentRef {
        ComponentRef::new("ZL", Layer::L)
    }
    /// The kernel itself, as the target of system calls.
    pub fn kernel() -> ComponentRef {
        ComponentRef::new("Kernel", Layer::K)
    }
    /// Location Manager Service.
    pub fn location_manager() -> ComponentRef {
        ComponentRef::new("LMS", Layer::AF)
    }
    /// GPS Location Provider, framework half.
    pub fn gps_provider() -> ComponentRef {
        ComponentRef::new("GLP", Layer::AF)
    }
    /// GPS Location Provider, native half.
    pub fn gps_provider_native() -> ComponentRef {
        ComponentRef::new("GLP", Layer::L)
    }
    /// GPS library.
    pub fn gps_library() -> ComponentRef {
        ComponentRef::new("GL", Layer::L)
    }
    /// Kernel driver backing the GPS.
    pub fn kernel_driver() -> ComponentRef {
        ComponentRef::new("KD", Layer::K)
    }
}

/// Linux-layer identity: uid, gid, supplementary groups, capabilities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credential {
    pub uid: u32,
    pub gid: u32,
    #[serde(default)]
    pub supplementary_groups: BTreeSet<u32>,
    #[serde(default)]
    pub capabilities: BTreeSet<String>,
}

impl Credential {
    pub fn new(uid: u32, gid: u32) -> Self {
        Self {
            uid,
            gid,
            supplementary_groups: BTreeSet::new(),
            capabilities: BTreeSet::new(),
        }
    }

    /// Root identity (uid 0, gid 0).
    pub fn root() -> Self {
        Self::new(0, 0)
    }

    /// The System Server identity: uid and gid `SYSTEM_UID`.
    pub fn system() -> Self {
        Self::new(SYSTEM_UID, SYSTEM_UID)
    }

    /// An application identity with matching uid/gid, as the installer
    /// allocates them.
    pub fn app(uid: u32) -> Self {
        Self::new(uid, uid)
    }

    pub fn with_groups(mut self, groups: impl IntoIterator<Item = u32>) -> Self {
        self.supplementary_groups.extend(groups);
        self
    }

    /// Adds capabilities, rejecting names outside [`CAPABILITY_REGISTRY`].
    pub fn with_capabilities<S: Into<String>>(
        mut self,
        caps: impl IntoIterator<Item = S>,
    ) -> Result<Self, ModelError> {
        for cap in caps {
            let cap = cap.into();
            if !CAPABILITY_REGISTRY.contains(&cap.as_str()) {
                return Err(ModelError::UnknownCapability(cap));
            }
            self.capabilities.insert(cap);
        }
        Ok(self)
    }

    pub fn is_root(&self) -> bool {
        self.uid == 0
    }

    /// True when gid or any supplementary group matches.
    pub fn in_group(&self, gid: u32) -> bool {
        self.gid == gid || self.supplementary_groups.contains(&gid)
    }
}

/// Tag identifying one of the six call kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallKind {
    Binder,
    Jni,
    Socket,
    Sys,
    Func,
    Dl,
}

impl CallKind {
    pub const ALL: [CallKind; 6] = [
        CallKind::Binder,
        CallKind::Jni,
        CallKind::Socket,
        CallKind::Sys,
        CallKind::Func,
        CallKind::Dl,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            CallKind::Binder => "binder",
            CallKind::Jni => "jni",
            CallKind::Socket => "socket",
            CallKind::Sys => "sys",
            CallKind::Func => "func",
            CallKind::Dl => "dl",
        }
    }

    pub fn parse(tag: &str) -> Option<CallKind> {
        match tag {
            "binder" => Some(CallKind::Binder),
            "jni" => Some(CallKind::Jni),
            "socket" => Some(CallKind::Socket),
            "sys" => Some(CallKind::Sys),
            "func" => Some(CallKind::Func),
            "dl" => Some(CallKind::Dl),
            _ => None,
        }
    }

    /// The layer a call of this kind physically lands on, independent of
    /// which component logically receives it. Binder, socket and system
    /// calls terminate at kernel objects; JNI and dynamic loads resolve
    /// native code in the library layer; plain function calls stay in the
    /// caller's layer.
    pub fn physical_destination(self, logical_target: Layer) -> Layer {
        match self {
            CallKind::Binder | CallKind::Socket | CallKind::Sys => Layer::K,
            CallKind::Jni | CallKind::Dl => Layer::L,
            CallKind::Func => logical_target,
        }
    }
}

impl fmt::Display for CallKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One inter-component call, tagged by kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Call {
    /// IPC through the Binder driver; `obj` is the serializable request.
    Binder { obj: Payload },
    /// Java-to-native invocation of method `mtd`.
    Jni { mtd: String, obj: Payload },
    /// Write of message `m` to the kernel socket `id`.
    Socket { id: String, m: Payload },
    /// Direct system call.
    Sys { id: String, args: Vec<Payload> },
    /// Intra-component function call.
    Func { id: String, args: Vec<Payload> },
    /// Dynamic load of a pre-compiled library.
    Dl { id: String },
}

impl Call {
    pub fn kind(&self) -> CallKind {
        match self {
            Call::Binder { .. } => CallKind::Binder,
            Call::Jni { .. } => CallKind::Jni,
            Call::Socket { .. } => CallKind::Socket,
            Call::Sys { .. } => CallKind::Sys,
            Call::Func { .. } => CallKind::Func,
            Call::Dl { .. } => CallKind::Dl,
        }
    }

    /// Identifier rendered in flow signatures. Binder requests carry an
    /// action name in their payload (either a bare string or an object with
    /// an `"action"` field); all other kinds have an explicit id.
    pub fn id_label(&self) -> String {
        match self {
            Call::Binder { obj } => match obj {
                Payload::String(action) => action.clone(),
                Payload::Object(map) => map
                    .get("action")
                    .and_then(|v| v.as_str())
                    .unwrap_or("obj")
                    .to_string(),
                _ => "obj".to_string(),
            },
            Call::Jni { mtd, .. } => mtd.clone(),
            Call::Socket { id, .. } => id.clone(),
            Call::Sys { id, .. } => id.clone(),
            Call::Func { id, .. } => id.clone(),
            Call::Dl { id } => id.clone(),
        }
    }

    pub fn binder_action(action: &str) -> Call {
        Call::Binder {
            obj: Payload::String(action.to_string()),
        }
    }
}

/// Result of attempting a call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Outcome {
    Allowed,
    Denied { reason: String },
    Failed { reason: String },
}

impl Outcome {
    pub fn is_allowed(&self) -> bool {
        matches!(self, Outcome::Allowed)
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Outcome::Allowed => None,
            Outcome::Denied { reason } | Outcome::Failed { reason } => Some(reason),
        }
    }
}

/// One observed call with its causal parent and eventual outcome.
///
/// `outcome` starts unset (pending) and is set exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallEvent {
    pub event_id: u64,
    pub parent_id: Option<u64>,
    pub source: ComponentRef,
    pub target: ComponentRef,
    pub call: Call,
    pub caller_cred: Credential,
    pub outcome: Option<Outcome>,
}

impl CallEvent {
    pub fn set_outcome(&mut self, outcome: Outcome) {
        assert!(self.outcome.is_none(), "outcome already set on event {}", self.event_id);
        self.outcome = Some(outcome);
    }
}

/// Issues fresh event ids within one simulation context. Ids start at 1 and
/// are strictly increasing, so no two events from the same factory collide.
#[derive(Debug, Default)]
pub struct EventFactory {
    next_id: u64,
}

impl EventFactory {
    pub fn new() -> Self {
        Self { next_id: 0 }
    }

    pub fn make_event(
        &mut self,
        source: ComponentRef,
        target: ComponentRef,
        call: Call,
        caller_cred: Credential,
        parent_id: Option<u64>,
    ) -> CallEvent {
        self.next_id += 1;
        CallEvent {
            event_id: self.next_id,
            parent_id,
            source,
            target,
            call,
            caller_cred,
            outcome: None,
        }
    }
}

/// A causally linked chain of call events: `events[i+1].parent_id` equals
/// `events[i].event_id` along the spine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub events: Vec<CallEvent>,
}

impl Flow {
    /// Builds a flow, validating non-emptiness and the parent chain.
    pub fn try_new(events: Vec<CallEvent>) -> Result<Flow, ModelError> {
        if events.is_empty() {
            return Err(ModelError::EmptyFlow);
        }
        for pair in events.windows(2) {
            if pair[1].parent_id != Some(pair[0].event_id) {
                return Err(ModelError::BrokenChain {
                    child: pair[1].event_id,
                    expected_parent: pair[0].event_id,
                });
            }
        }
        Ok(Flow { events })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// True when any component in the flow sits at `layer`.
    pub fn touches_layer(&self, layer: Layer) -> bool {
        self.events
            .iter()
            .any(|e| e.source.layer == layer || e.target.layer == layer)
    }
}

/// Classification of a (call kind, source layer, destination layer) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologyClass {
    Documented,
    Discouraged,
    Impossible,
}

/// Classifies which layers may source and receive each call kind.
///
/// The encoding follows the call catalog: binder calls may come from any
/// Android-stack layer and land on the kernel driver; JNI is for the Java
/// layers into L; socket and system calls are the business of AF and L,
/// with direct application use of sockets discouraged rather than
/// forbidden; func stays within a layer; dl serves A and AF.
///
/// AR-sourced socket and sys cells are not spelled out in the catalog:
/// sys from AR is encoded Discouraged (runtime code can reach the syscall
/// interface), socket from AR Impossible. These two cells are assumptions.
pub fn topology_class(kind: CallKind, src: Layer, dst: Layer) -> TopologyClass {
    use CallKind::*;
    use Layer::*;
    use TopologyClass::*;
    match kind {
        Binder => match (src, dst) {
            (A | AF | AR | L, K) => Documented,
            _ => Impossible,
        },
        Jni => match (src, dst) {
            (A | AF | AR, L) => Documented,
            _ => Impossible,
        },
        Socket => match (src, dst) {
            (AF | L, K) => Documented,
            (A, K) => Discouraged,
            _ => Impossible,
        },
        Sys => match (src, dst) {
            (AF | L, K) => Documented,
            (A | AR, K) => Discouraged,
            _ => Impossible,
        },
        Func => {
            if src == dst {
                Documented
            } else {
                Impossible
            }
        }
        Dl => match (src, dst) {
            (A | AF, L) => Documented,
            _ => Impossible,
        },
    }
}

/// Canonical text rendering of a flow: one `Src_Layer --kind(id)--> Dst_Layer`
/// segment per event, joined by `"; "`. Equal flows yield equal signatures.
pub fn flow_signature(flow: &Flow) -> Result<String, ModelError> {
    if flow.events.is_empty() {
        return Err(ModelError::EmptyFlow);
    }
    let segments: Vec<String> = flow
        .events
        .iter()
        .map(|e| {
            format!(
                "{} --{}({})--> {}",
                e.source.label(),
                e.call.kind(),
                e.call.id_label(),
                e.target.label()
            )
        })
        .collect();
    Ok(segments.join("; "))
}
