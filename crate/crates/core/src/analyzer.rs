//! Flow extraction and template matching over call event logs.
//!
//! Event logs are flattened into causal chains, each chain is compared
//! against a catalog of flow templates, and chains that fit no template
//! fully are reported as anomalous together with findings that say what
//! diverged: a wrong originator, a skipped framework layer, or use of a
//! discouraged call edge.

use serde::{Deserialize, Serialize};

use crate::model::{
    flow_signature, topology_class, CallEvent, CallKind, ComponentRef, Flow, Layer, TopologyClass,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyzerError {
    #[error("template {0:?} is already registered")]
    DuplicateTemplate(String),
    #[error("event {event_id} references parent {parent_id} which was not seen earlier")]
    DanglingParent { event_id: u64, parent_id: u64 },
    #[error("event id {0} appears twice")]
    DuplicateEventId(u64),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Pattern over components: `Name_Layer` pins both, `*_Layer` pins the
/// layer only, a bare `Name` pins the name at any layer, `*` matches
/// everything. The layer suffix is split off at the last underscore, so
/// names may themselves contain underscores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentPattern {
    pub name: Option<String>,
    pub layer: Option<Layer>,
}

impl ComponentPattern {
    pub fn parse(text: &str) -> Self {
        if let Some((prefix, suffix)) = text.rsplit_once('_') {
            if let Some(layer) = Layer::parse(suffix) {
                let name = if prefix == "*" {
                    None
                } else {
                    Some(prefix.to_string())
                };
                return Self {
                    name,
                    layer: Some(layer),
                };
            }
        }
        let name = if text == "*" {
            None
        } else {
            Some(text.to_string())
        };
        Self { name, layer: None }
    }

    pub fn matches(&self, component: &ComponentRef) -> bool {
        if let Some(name) = &self.name {
            if name != &component.name {
                return false;
            }
        }
        if let Some(layer) = self.layer {
            if layer != component.layer {
                return false;
            }
        }
        true
    }
}

/// One step of a flow template. `source` and `target` hold pattern text in
/// the [`ComponentPattern`] syntax; `call_id` pins the call identifier when
/// present; optional steps may be absent from a matching flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateStep {
    pub kind: CallKind,
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_id: Option<String>,
    #[serde(default)]
    pub optional: bool,
}

impl TemplateStep {
    fn new(kind: CallKind, source: &str, target: &str) -> Self {
        Self {
            kind,
            source: source.to_string(),
            target: target.to_string(),
            call_id: None,
            optional: false,
        }
    }

    fn with_id(mut self, id: &str) -> Self {
        self.call_id = Some(id.to_string());
        self
    }

    fn optional(mut self) -> Self {
        self.optional = true;
        self
    }

    fn full_match(&self, event: &CallEvent) -> bool {
        self.alignment_match(event) && ComponentPattern::parse(&self.source).matches(&event.source)
    }

    /// Match ignoring the source, used to find which template a deviant
    /// flow was aiming at.
    fn alignment_match(&self, event: &CallEvent) -> bool {
        self.kind == event.call.kind()
            && ComponentPattern::parse(&self.target).matches(&event.target)
            && self
                .call_id
                .as_ref()
                .map_or(true, |id| *id == event.call.id_label())
    }
}

/// A named sequence of template steps describing one sanctioned flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowTemplate {
    pub name: String,
    pub steps: Vec<TemplateStep>,
}

impl FlowTemplate {
    /// Whether the whole flow matches: template steps are consumed in
    /// order, optional steps may be skipped, and every flow event must be
    /// consumed by some step.
    pub fn matches(&self, flow: &Flow) -> bool {
        let mut j = 0;
        for step in &self.steps {
            if j < flow.events.len() && step.full_match(&flow.events[j]) {
                j += 1;
            } else if !step.optional {
                return false;
            }
        }
        j == flow.events.len()
    }

    /// Order-preserving embedding of every flow event into a contiguous
    /// run of template steps, ignoring sources. Returns the template index
    /// aligned to each flow event. Unmatched template prefix and suffix
    /// are fine; a flow event that fits nowhere is not.
    fn kind_alignment(&self, flow: &Flow) -> Option<Vec<usize>> {
        (0..self.steps.len()).find_map(|start| self.align_from(flow, start))
    }

    fn align_from(&self, flow: &Flow, start: usize) -> Option<Vec<usize>> {
        let mut mapping = Vec::with_capacity(flow.events.len());
        let mut i = start;
        for event in &flow.events {
            loop {
                let step = self.steps.get(i)?;
                if step.alignment_match(event) {
                    mapping.push(i);
                    i += 1;
                    break;
                }
                if step.optional {
                    i += 1;
                } else {
                    return None;
                }
            }
        }
        Some(mapping)
    }

    fn mentions_layer(&self, layer: Layer) -> bool {
        self.steps.iter().any(|s| {
            ComponentPattern::parse(&s.source).layer == Some(layer)
                || ComponentPattern::parse(&s.target).layer == Some(layer)
        })
    }
}

/// What the analyzer flagged about one flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    /// A step came from a component the template does not sanction.
    OriginatorMismatch,
    /// The flow reaches the kernel without passing the framework layer the
    /// nearest template routes through.
    LayerBypass,
    /// A step uses a call edge that is possible but discouraged.
    DiscouragedCall,
    /// No registered template fully matches the flow.
    UnknownFlow,
}

impl FindingKind {
    fn rank(self) -> u8 {
        match self {
            FindingKind::OriginatorMismatch => 0,
            FindingKind::LayerBypass => 1,
            FindingKind::DiscouragedCall => 2,
            FindingKind::UnknownFlow => 3,
        }
    }
}

impl std::fmt::Display for FindingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FindingKind::OriginatorMismatch => "originator-mismatch",
            FindingKind::LayerBypass => "layer-bypass",
            FindingKind::DiscouragedCall => "discouraged-call",
            FindingKind::UnknownFlow => "unknown-flow",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    /// Index of the offending flow step, when the finding is about one.
    pub step_index: Option<usize>,
    pub detail: String,
}

/// Verdict for one flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum MatchOutcome {
    Matched {
        template: String,
    },
    /// `nearest` names the template the flow aligns with, when any does.
    /// `findings` is never empty.
    Anomalous {
        nearest: Option<String>,
        findings: Vec<Finding>,
    },
}

/// Registered templates, matched in registration order.
#[derive(Debug, Clone, Default)]
pub struct TemplateCatalog {
    templates: Vec<FlowTemplate>,
}

impl TemplateCatalog {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Catalog holding the two built-in flows: the cold application launch
    /// through the Activity Manager and zygote, and the GPS position query
    /// through the Location Manager.
    pub fn builtin() -> Self {
        use CallKind::*;
        let mut catalog = Self::empty();
        catalog
            .register(FlowTemplate {
                name: "app-launch".to_string(),
                steps: vec![
                    TemplateStep::new(Binder, "*_A", "AM_AF").with_id("StartActivity"),
                    TemplateStep::new(Socket, "AM_AF", "ZP_AR").with_id("zygote"),
                    TemplateStep::new(Jni, "ZP_AR", "ZL_L").with_id("ForkAndSpecialize"),
                    TemplateStep::new(Sys, "ZL_L", "Kernel_K").with_id("fork"),
                    TemplateStep::new(Sys, "Kernel_K", "Kernel_K")
                        .with_id("kill")
                        .optional(),
                ],
            })
            .expect("fresh catalog");
        catalog
            .register(FlowTemplate {
                name: "gps-query".to_string(),
                steps: vec![
                    TemplateStep::new(Binder, "*_A", "LMS_AF"),
                    TemplateStep::new(Func, "LMS_AF", "GLP_AF"),
                    TemplateStep::new(Jni, "GLP_AF", "GLP_L"),
                    TemplateStep::new(Dl, "GLP_L", "GL_L").with_id("libgps.so"),
                    TemplateStep::new(Sys, "GL_L", "KD_K"),
                ],
            })
            .expect("fresh catalog");
        catalog
    }

    pub fn register(&mut self, template: FlowTemplate) -> Result<(), AnalyzerError> {
        if self.templates.iter().any(|t| t.name == template.name) {
            return Err(AnalyzerError::DuplicateTemplate(template.name));
        }
        self.templates.push(template);
        Ok(())
    }

    pub fn templates(&self) -> &[FlowTemplate] {
        &self.templates
    }

    pub fn get(&self, name: &str) -> Option<&FlowTemplate> {
        self.templates.iter().find(|t| t.name == name)
    }
}

/// Matches one flow against the catalog.
///
/// A template that fully matches wins. Otherwise the first template with a
/// kind-alignment is taken as the flow's nearest relative and the
/// divergences from it become findings; discouraged call edges are flagged
/// regardless. A flow with no other finding is reported as unknown, so an
/// anomalous outcome always carries at least one finding.
pub fn match_flow(catalog: &TemplateCatalog, flow: &Flow) -> MatchOutcome {
    for template in catalog.templates() {
        if template.matches(flow) {
            return MatchOutcome::Matched {
                template: template.name.clone(),
            };
        }
    }

    let mut findings = Vec::new();
    let mut nearest = None;
    for template in catalog.templates() {
        if let Some(mapping) = template.kind_alignment(flow) {
            nearest = Some(template.name.clone());
            for (flow_idx, step_idx) in mapping.iter().enumerate() {
                let step = &template.steps[*step_idx];
                let event = &flow.events[flow_idx];
                if !ComponentPattern::parse(&step.source).matches(&event.source) {
                    findings.push(Finding {
                        kind: FindingKind::OriginatorMismatch,
                        step_index: Some(flow_idx),
                        detail: format!(
                            "source {}, expected {}",
                            event.source.label(),
                            step.source
                        ),
                    });
                }
            }
            if flow.touches_layer(Layer::K)
                && !flow.touches_layer(Layer::AF)
                && template.mentions_layer(Layer::AF)
            {
                findings.push(Finding {
                    kind: FindingKind::LayerBypass,
                    step_index: None,
                    detail: "reaches the kernel without passing the application framework"
                        .to_string(),
                });
            }
            break;
        }
    }

    for (idx, event) in flow.events.iter().enumerate() {
        let kind = event.call.kind();
        let physical = kind.physical_destination(event.target.layer);
        if topology_class(kind, event.source.layer, physical) == TopologyClass::Discouraged {
            findings.push(Finding {
                kind: FindingKind::DiscouragedCall,
                step_index: Some(idx),
                detail: format!(
                    "{} call from layer {} is discouraged",
                    kind, event.source.layer
                ),
            });
        }
    }

    if findings.is_empty() {
        findings.push(Finding {
            kind: FindingKind::UnknownFlow,
            step_index: None,
            detail: "flow does not fully match any registered template".to_string(),
        });
    }
    findings.sort_by_key(|f| (f.step_index.unwrap_or(0), f.kind.rank()));
    MatchOutcome::Anomalous { nearest, findings }
}

/// Splits an ordered event log into causal flows.
///
/// An event without a parent opens a flow. An event whose parent is the
/// current tail of a flow extends that flow. An event whose parent was
/// seen earlier but is no longer a tail opens a new flow branching off it.
/// A parent that never appeared is an error.
pub fn extract_flows(events: &[CallEvent]) -> Result<Vec<Flow>, AnalyzerError> {
    let mut chains: Vec<Vec<CallEvent>> = Vec::new();
    let mut tails: Vec<u64> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();

    for event in events {
        if !seen.insert(event.event_id) {
            return Err(AnalyzerError::DuplicateEventId(event.event_id));
        }
        match event.parent_id {
            None => {
                chains.push(vec![event.clone()]);
                tails.push(event.event_id);
            }
            Some(parent) => {
                if let Some(idx) = tails.iter().position(|t| *t == parent) {
                    chains[idx].push(event.clone());
                    tails[idx] = event.event_id;
                } else if seen.contains(&parent) {
                    chains.push(vec![event.clone()]);
                    tails.push(event.event_id);
                } else {
                    return Err(AnalyzerError::DanglingParent {
                        event_id: event.event_id,
                        parent_id: parent,
                    });
                }
            }
        }
    }
    chains.into_iter().map(|c| Ok(Flow { events: c })).collect()
}

/// Analysis result for one extracted flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowReport {
    pub signature: String,
    pub outcome: MatchOutcome,
}

/// Extracts flows from an event log and matches each against the catalog.
pub fn analyze_events(
    catalog: &TemplateCatalog,
    events: &[CallEvent],
) -> Result<Vec<FlowReport>, AnalyzerError> {
    let flows = extract_flows(events)?;
    flows
        .iter()
        .map(|flow| {
            Ok(FlowReport {
                signature: flow_signature(flow)?,
                outcome: match_flow(catalog, flow),
            })
        })
        .collect()
}
