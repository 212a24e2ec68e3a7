//! Deterministic simulator and analysis toolkit for Android cross-layer
//! call flows.
//!
//! The crate models the Android software stack as five layers and the calls
//! that cross them, enforces the platform's two permission regimes (the
//! framework-level permission model and Linux discretionary access control),
//! reproduces the Zygote process-spawning protocol together with a known
//! weakness in its socket permissions, and replays recorded system-call
//! traces against the simulated kernel.
//!
//! Modules:
//! - [`model`]: layers, components, credentials, calls, events, flows.
//! - [`asf`]: framework permission model (manifests, install, intents,
//!   API checks, per-URI grants).
//! - [`kernel`]: simulated kernel state (processes, sockets, DAC checks,
//!   memory accounting, syscall dispatch).
//! - [`zygote`]: the Zygote fork protocol and its specialization policy.
//! - [`scenarios`]: scripted end-to-end scenarios over a booted system.
//! - [`analyzer`]: flow extraction and template matching over event logs.
//! - [`replay`]: syscall trace parsing, per-service profiling, replay.

pub mod analyzer;
pub mod asf;
pub mod kernel;
pub mod model;
pub mod replay;
pub mod scenarios;
pub mod zygote;

pub use model::{
    flow_signature, topology_class, Call, CallEvent, CallKind, ComponentRef, Credential,
    EventFactory, Flow, Layer, Outcome, Payload, TopologyClass,
};
