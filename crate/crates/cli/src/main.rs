//! Command line front end: scenario simulation, event-log flow analysis,
//! syscall trace replay, and service profiling.
//!
//! Exit codes are a contract: 0 for a nominal run, 2 for usage or parse
//! problems, 3 when a simulated device ends up boot-looping, 4 when any
//! analyzed flow is anomalous. Replay failures are data, not errors, so
//! `replay` exits 0 even when calls fail.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use droidflow::analyzer::{analyze_events, FlowReport, FlowTemplate, MatchOutcome, TemplateCatalog};
use droidflow::model::{CallEvent, Credential, SYSTEM_UID};
use droidflow::replay::{parse_trace, replay_as, service_syscall_profile, ReplayReport, TraceRecord};
use droidflow::scenarios::{run_scenario, Scenario, ScenarioReport, SystemConfig, World};

const EXIT_USAGE: u8 = 2;
const EXIT_BOOT_LOOP: u8 = 3;
const EXIT_ANOMALOUS: u8 = 4;

/// Prints one line to stdout. When the reader has already closed the pipe
/// (`droidflow ... | head`), stops with the conventional SIGPIPE status
/// instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {
        if writeln!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(141);
        }
    };
}

#[derive(Parser)]
#[command(name = "droidflow", version, about = "Cross-layer call flow simulator and analyzer")]
struct Cli {
    /// Reserved; runs are deterministic with or without it.
    #[arg(long, global = true, hide = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario and report what the device ended up doing.
    Simulate {
        /// One of launch, malicious, flood, bootloop, gps.
        name: String,
        /// Apply the zygote socket fix before the run.
        #[arg(long)]
        patched: bool,
        /// JSON file with device parameters; missing fields use defaults.
        #[arg(long, value_name = "path")]
        config: Option<PathBuf>,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Segment an event log into flows and match each against templates.
    Analyze {
        /// JSON file: an event array, a flow, or a scenario report.
        events: PathBuf,
        /// JSON file with extra templates, appended to the built-ins.
        #[arg(long, value_name = "path")]
        templates: Option<PathBuf>,
        /// Emit the flow reports as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Re-invoke a recorded syscall trace under the given identity.
    Replay {
        trace: PathBuf,
        /// Uid to replay as; must be an application identity.
        #[arg(long)]
        uid: u32,
        /// Gid to replay as; defaults to the uid.
        #[arg(long)]
        gid: Option<u32>,
        /// Emit the replay report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Group a trace by service thread and list each one's distinct calls.
    Profile {
        trace: PathBuf,
        /// Emit the profile as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Inspect the registered flow templates.
    Templates {
        #[command(subcommand)]
        action: TemplatesAction,
    },
}

#[derive(Subcommand)]
enum TemplatesAction {
    /// Print the built-in templates and their steps.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Simulate {
            name,
            patched,
            config,
            json,
        } => cmd_simulate(&name, patched, config.as_deref(), json),
        Command::Analyze {
            events,
            templates,
            json,
        } => cmd_analyze(&events, templates.as_deref(), json),
        Command::Replay {
            trace,
            uid,
            gid,
            json,
        } => cmd_replay(&trace, uid, gid, json),
        Command::Profile { trace, json } => cmd_profile(&trace, json),
        Command::Templates {
            action: TemplatesAction::List,
        } => cmd_templates_list(),
    }
}

fn load_config(path: Option<&Path>, patched: bool) -> Result<SystemConfig> {
    let mut config = match path {
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SystemConfig::default(),
    };
    if patched {
        config = config.apply_patch();
    }
    Ok(config)
}

fn cmd_simulate(
    name: &str,
    patched: bool,
    config: Option<&Path>,
    json: bool,
) -> Result<ExitCode> {
    let Some(scenario) = Scenario::parse(name) else {
        bail!("unknown scenario {name:?}; expected one of launch, malicious, flood, bootloop, gps");
    };
    let config = load_config(config, patched)?;
    let report = run_scenario(scenario, &config)?;
    if json {
        out!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_scenario(&report);
    }
    Ok(if report.boot_looped {
        ExitCode::from(EXIT_BOOT_LOOP)
    } else {
        ExitCode::SUCCESS
    })
}

fn print_scenario(report: &ScenarioReport) {
    out!("scenario:  {}", report.scenario);
    out!("flow:      {}", report.signature);
    out!("processes: {}", report.final_process_count);
    out!("reboots:   {}", report.reboot_count);
    out!("boot loop: {}", report.boot_looped);
    if report.denials.is_empty() {
        out!("denials:   none");
    } else {
        out!("denials:");
        for d in &report.denials {
            out!("  [{}] {}", d.index, d.reason);
        }
    }
}

fn cmd_analyze(events_path: &Path, templates: Option<&Path>, json: bool) -> Result<ExitCode> {
    let events = load_events(events_path)?;
    let catalog = load_catalog(templates)?;
    let reports = analyze_events(&catalog, &events)?;
    if json {
        out!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        print_analysis(&reports);
    }
    let anomalous = reports
        .iter()
        .any(|r| matches!(r.outcome, MatchOutcome::Anomalous { .. }));
    Ok(if anomalous {
        ExitCode::from(EXIT_ANOMALOUS)
    } else {
        ExitCode::SUCCESS
    })
}

fn print_analysis(reports: &[FlowReport]) {
    for (i, report) in reports.iter().enumerate() {
        out!("flow {}: {}", i + 1, report.signature);
        match &report.outcome {
            MatchOutcome::Matched { template } => out!("  matched: {template}"),
            MatchOutcome::Anomalous { nearest, findings } => {
                match nearest {
                    Some(name) => out!("  anomalous (nearest: {name})"),
                    None => out!("  anomalous"),
                }
                for f in findings {
                    match f.step_index {
                        Some(step) => {
                            out!("    - {} at step {}: {}", f.kind, step, f.detail)
                        }
                        None => out!("    - {}: {}", f.kind, f.detail),
                    }
                }
            }
        }
    }
    let anomalous = reports
        .iter()
        .filter(|r| matches!(r.outcome, MatchOutcome::Anomalous { .. }))
        .count();
    out!("{} flows analyzed, {} anomalous", reports.len(), anomalous);
}

/// Accepts a bare event array, a `{"events": [...]}` flow object, or a
/// scenario report carrying a flow.
fn load_events(path: &Path) -> Result<Vec<CallEvent>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let inner = match &value {
        serde_json::Value::Array(_) => value,
        serde_json::Value::Object(map) => map
            .get("events")
            .or_else(|| map.get("flow").and_then(|f| f.get("events")))
            .cloned()
            .with_context(|| {
                format!(
                    "{}: expected an event array, a flow, or a scenario report",
                    path.display()
                )
            })?,
        _ => bail!(
            "{}: expected an event array, a flow, or a scenario report",
            path.display()
        ),
    };
    serde_json::from_value(inner).with_context(|| format!("parsing events in {}", path.display()))
}

fn load_catalog(path: Option<&Path>) -> Result<TemplateCatalog> {
    let mut catalog = TemplateCatalog::builtin();
    if let Some(p) = path {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let extra: Vec<FlowTemplate> =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        for template in extra {
            catalog.register(template)?;
        }
    }
    Ok(catalog)
}

fn load_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_trace(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_replay(trace: &Path, uid: u32, gid: Option<u32>, json: bool) -> Result<ExitCode> {
    if uid == 0 || uid == SYSTEM_UID {
        bail!("replay runs under an application identity, not uid {uid}");
    }
    let records = load_trace(trace)?;
    let mut world = World::boot(&SystemConfig::default())?;
    let caller = Credential::new(uid, gid.unwrap_or(uid));
    let report = replay_as(&mut world.kernel, &records, &caller);
    if json {
        out!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_replay(&report);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_replay(report: &ReplayReport) {
    out!(
        "replayed {} calls: {} succeeded, {} failed (success ratio {:.3})",
        report.total,
        report.succeeded,
        report.failed.len(),
        report.success_ratio
    );
    for f in &report.failed {
        out!("  {:<10} {:<14} {}", f.call, f.code, f.reason);
    }
}

fn cmd_profile(trace: &Path, json: bool) -> Result<ExitCode> {
    let records = load_trace(trace)?;
    let profile = service_syscall_profile(&records);
    if json {
        out!("{}", serde_json::to_string_pretty(&profile)?);
    } else if profile.is_empty() {
        out!("no records");
    } else {
        for (service, calls) in &profile {
            let list: Vec<&str> = calls.iter().map(String::as_str).collect();
            out!("{service}: {}", list.join(", "));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_templates_list() -> Result<ExitCode> {
    let catalog = TemplateCatalog::builtin();
    for template in catalog.templates() {
        out!("{}", template.name);
        for step in &template.steps {
            let id = step.call_id.as_deref().unwrap_or("*");
            let optional = if step.optional { "  (optional)" } else { "" };
            out!(
                "  {} --{}({})--> {}{}",
                step.source,
                step.kind.tag(),
                id,
                step.target,
                optional
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}
