//! The example programs and contexts, and a runner that links them, runs
//! them against a world and reports what happened.

pub mod handlers;
pub mod http;
pub mod logging;
pub mod scenario;
pub mod webserver;
pub mod worlds;
pub mod zip;

use std::collections::BTreeMap;
use std::fmt;

use serde_json::json;
use thiserror::Error;

use crate::ctxdsl::{load_ctx, load_dual_ctx, DslError};
use crate::effect::{interpret, quote, Audit, History, Mechanism, Provenance, Run, Trace, World};
use crate::linker::{
    back_translate_ctx, back_translate_ctx_dual, compile_interface, compile_prog, compile_prog_dual, link_source,
    link_source_dual, link_target, link_target_dual, DualInterface, DualSourceProg, DualTargetCtx, SourceInterface,
    SourceProg, TargetCtx,
};
use crate::monitor::MonitorState;
use crate::traces::{ctx_events_respect, enforced_locally, every_request_gets_a_response, PostCond, TraceProperty};

pub use scenario::{Scenario, ScenarioError};
pub use webserver::WebPolicy;
pub use worlds::ScriptedWorld;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("unknown program `{0}`")]
    UnknownProgram(String),
    #[error("unknown context `{0}`")]
    UnknownContext(String),
    #[error("{0} cannot run under policy `{1}`")]
    PolicyMismatch(String, String),
    #[error("{program} is linked {expected}, not {given}")]
    ModeMismatch {
        program: String,
        expected: Mode,
        given: Mode,
    },
    #[error("context does not compile: {0}")]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    ProgFirst,
    CtxFirst,
}

impl Mode {
    pub fn from_name(s: &str) -> Option<Mode> {
        match s {
            "prog-first" => Some(Mode::ProgFirst),
            "ctx-first" => Some(Mode::CtxFirst),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::ProgFirst => "prog-first",
            Mode::CtxFirst => "ctx-first",
        })
    }
}

/// Which linker runs the pair: the compiled program with the raw context,
/// or the source program with the back-translated context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Via {
    Target,
    Source,
}

impl Via {
    pub fn from_name(s: &str) -> Option<Via> {
        match s {
            "target" => Some(Via::Target),
            "source" => Some(Via::Source),
            _ => None,
        }
    }
}

impl fmt::Display for Via {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Via::Target => "target",
            Via::Source => "source",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Program {
    WebServer(WebPolicy),
    Logging,
    Zip { close_early: bool },
}

pub const PROGRAM_NAMES: [&str; 4] = ["webserver", "logger", "zip", "zip-close-early"];

impl Program {
    /// `policy` selects the web server's monitor; other programs have only
    /// their own.
    pub fn from_name(name: &str, policy: Option<&str>) -> Result<Program, DemoError> {
        let program = match name {
            "webserver" => match policy {
                None => Program::WebServer(WebPolicy::Standard),
                Some(p) => Program::WebServer(
                    WebPolicy::from_name(p).ok_or_else(|| DemoError::PolicyMismatch(name.into(), p.into()))?,
                ),
            },
            "logger" | "logging" => Program::Logging,
            "zip" => Program::Zip { close_early: false },
            "zip-close-early" => Program::Zip { close_early: true },
            _ => return Err(DemoError::UnknownProgram(name.into())),
        };
        match policy {
            Some(p) if p != program.policy_name() => Err(DemoError::PolicyMismatch(name.into(), p.into())),
            _ => Ok(program),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Program::WebServer(_) => "webserver",
            Program::Logging => "logger",
            Program::Zip { close_early: false } => "zip",
            Program::Zip { close_early: true } => "zip-close-early",
        }
    }

    pub fn policy_name(&self) -> &'static str {
        match self {
            Program::WebServer(v) => v.name(),
            Program::Logging => "logging",
            Program::Zip { .. } => "zip",
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Program::Logging => Mode::CtxFirst,
            _ => Mode::ProgFirst,
        }
    }

    pub fn context_names(&self) -> &'static [&'static str] {
        match self {
            Program::WebServer(_) => &handlers::HANDLER_NAMES,
            Program::Logging => &logging::CONTEXT_NAMES,
            Program::Zip { .. } => &zip::CONTEXT_NAMES,
        }
    }

    pub fn dsl_context_names(&self) -> &'static [&'static str] {
        match self {
            Program::WebServer(_) => &handlers::HANDLER_NAMES,
            Program::Logging => &logging::DSL_CONTEXT_NAMES,
            Program::Zip { .. } => &zip::DSL_CONTEXT_NAMES,
        }
    }
}

/// A hand-written context, a bundled context-language one (`dsl-NAME`), or
/// context-language source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContextRef {
    Named(String),
    Dsl(String),
    Source(String),
}

impl ContextRef {
    pub fn parse(name: &str) -> ContextRef {
        match name.strip_prefix("dsl-") {
            Some(n) => ContextRef::Dsl(n.to_string()),
            None => ContextRef::Named(name.to_string()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ContextRef::Named(n) => n.clone(),
            ContextRef::Dsl(n) => format!("dsl-{n}"),
            ContextRef::Source(_) => "<source>".into(),
        }
    }

    fn source(&self, lookup: fn(&str) -> Option<&'static str>) -> Result<Option<String>, DemoError> {
        match self {
            ContextRef::Named(_) => Ok(None),
            ContextRef::Dsl(n) => lookup(n)
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| DemoError::UnknownContext(self.label())),
            ContextRef::Source(s) => Ok(Some(s.clone())),
        }
    }
}

pub fn web_context(c: &ContextRef) -> Result<webserver::WebCtx, DemoError> {
    match c.source(handlers::dsl_source)? {
        Some(src) => Ok(load_ctx(&src, &webserver::handler_type())?),
        None => handlers::handler(&c.label()).ok_or_else(|| DemoError::UnknownContext(c.label())),
    }
}

pub fn log_context(c: &ContextRef) -> Result<logging::LogCtx, DemoError> {
    match c.source(logging::dsl_source)? {
        Some(src) => Ok(load_dual_ctx(&src, &logging::logger_type())?),
        None => logging::context(&c.label()).ok_or_else(|| DemoError::UnknownContext(c.label())),
    }
}

pub fn zip_context(c: &ContextRef) -> Result<zip::ZipCtx, DemoError> {
    match c.source(zip::dsl_source)? {
        Some(src) => Ok(load_ctx(&src, &zip::zip_type())?),
        None => zip::context(&c.label()).ok_or_else(|| DemoError::UnknownContext(c.label())),
    }
}

/// Links a program with a context it receives and runs the result in `w`.
pub fn run_prog_first<S: MonitorState>(
    i: &SourceInterface<S>,
    p: &SourceProg<S>,
    c: &TargetCtx<S>,
    w: World,
    via: Via,
) -> Run<S, i64> {
    let whole = match via {
        Via::Target => link_target(&compile_interface(i), &compile_prog(i, p.clone()), c),
        Via::Source => link_source(i, p, &back_translate_ctx(i, c.clone())).1,
    };
    interpret(whole, w, &i.mstate)
}

/// Links a context with the program library it receives and runs it in `w`.
pub fn run_ctx_first<S: MonitorState>(
    i: &DualInterface<S>,
    p: &DualSourceProg<S>,
    c: &DualTargetCtx<S>,
    w: World,
    via: Via,
) -> Run<S, i64> {
    let whole = match via {
        Via::Target => link_target_dual(&i.target(), compile_prog_dual(i, p), c),
        Via::Source => link_source_dual(i, p, &back_translate_ctx_dual(i, c.clone())).1,
    };
    interpret(whole, w, &i.mstate)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub property: String,
    pub holds: bool,
}

fn verdict(property: &str, holds: bool) -> Verdict {
    Verdict {
        property: property.into(),
        holds,
    }
}

/// Everything observable about one run.
#[derive(Debug, Clone)]
pub struct Report {
    pub program: String,
    pub context: String,
    pub mode: Mode,
    pub via: Via,
    pub policy: String,
    pub result: i64,
    pub trace: Trace,
    pub verdicts: Vec<Verdict>,
    pub diagnostics: Vec<Provenance>,
    pub audit: Audit,
    pub responses: BTreeMap<String, Vec<Vec<u8>>>,
    pub console: Vec<u8>,
}

impl Report {
    pub fn verdict(&self, property: &str) -> Option<bool> {
        self.verdicts.iter().find(|v| v.property == property).map(|v| v.holds)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let text = |b: &[u8]| String::from_utf8_lossy(b).into_owned();
        json!({
            "program": self.program,
            "context": self.context,
            "mode": self.mode.to_string(),
            "via": self.via.to_string(),
            "policy": self.policy,
            "result": self.result,
            "trace": self.trace.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "verdicts": self.verdicts.iter().map(|v| (v.property.clone(), v.holds)).collect::<BTreeMap<_, _>>(),
            "diagnostics": self.diagnostics.iter().map(|p| json!({
                "mechanism": p.mechanism.to_string(),
                "label": p.label,
            })).collect::<Vec<_>>(),
            "audit": self.audit,
            "responses": self.responses.iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|r| text(r)).collect::<Vec<_>>()))
                .collect::<BTreeMap<_, _>>(),
            "console": text(&self.console),
        })
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "program:  {} (policy {})", self.program, self.policy)?;
        writeln!(f, "context:  {}", self.context)?;
        writeln!(f, "mode:     {} via {}", self.mode, self.via)?;
        writeln!(f, "result:   {}", self.result)?;
        writeln!(f, "trace ({} events):", self.trace.len())?;
        for e in &self.trace {
            writeln!(f, "  {e}")?;
        }
        if !self.diagnostics.is_empty() {
            writeln!(f, "blocked:")?;
            for p in &self.diagnostics {
                writeln!(f, "  {p}")?;
            }
        }
        for (client, rs) in &self.responses {
            for r in rs {
                let status = r.split(|&b| b == b'\r').next().unwrap_or_default();
                writeln!(f, "response to {client}: {}", quote(status))?;
            }
        }
        if !self.console.is_empty() {
            writeln!(f, "console:  {}", quote(&self.console))?;
        }
        writeln!(f, "verdicts:")?;
        for v in &self.verdicts {
            writeln!(f, "  {:<32} {}", v.property, if v.holds { "holds" } else { "VIOLATED" })?;
        }
        Ok(())
    }
}

/// Every diagnostic names the mechanism expected to stop this context.
fn attributed(context: &ContextRef, diagnostics: &[Provenance]) -> Option<bool> {
    let name = match context {
        ContextRef::Named(n) | ContextRef::Dsl(n) => n,
        ContextRef::Source(_) => return None,
    };
    if !handlers::HANDLER_NAMES.contains(&name.as_str()) {
        return None;
    }
    let expected: Option<Mechanism> = handlers::expected_mechanism(name);
    Some(diagnostics.iter().all(|p| Some(p.mechanism) == expected))
}

/// The whole-run guarantee for a program's interface.
pub fn psi(program: Program) -> PostCond {
    match program {
        Program::WebServer(v) => webserver::interface(v).psi,
        Program::Logging => logging::interface().psi(),
        Program::Zip { .. } => zip::interface().psi,
    }
}

fn verdicts(program: Program, context: &ContextRef, run_trace: &Trace, result: i64, diags: &[Provenance], audit: &Audit) -> Vec<Verdict> {
    let h0 = History::empty();
    let mut out = match program {
        Program::WebServer(v) => {
            let sigma = webserver::sigma(v);
            let mut vs = vec![
                verdict("every_request_gets_a_response", every_request_gets_a_response(run_trace)),
                verdict("ctx_respects_sigma", ctx_events_respect(&sigma, &h0, run_trace)),
            ];
            if let Some(ok) = attributed(context, diags) {
                vs.push(verdict("attribution", ok));
            }
            vs
        }
        Program::Logging => vec![verdict("enforced_locally", enforced_locally(&logging::sigma(), &h0, run_trace))],
        Program::Zip { .. } => vec![verdict(zip::psi().name(), zip::psi().holds(&h0, result, run_trace))],
    };
    out.push(verdict("capability_discipline", audit.capability_discipline_holds()));
    out
}

/// How to run a program: its linking mode, which linker, and the server's
/// iteration budget.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub mode: Mode,
    pub via: Via,
    pub max_iterations: usize,
}

impl RunConfig {
    pub fn natural(program: Program, max_iterations: usize) -> RunConfig {
        RunConfig {
            mode: program.mode(),
            via: Via::Target,
            max_iterations,
        }
    }
}

/// The result and trace of a run, without the report around them.
pub fn run_raw(program: Program, context: &ContextRef, cfg: RunConfig, w: World) -> Result<(i64, Trace, Report), DemoError> {
    if cfg.mode != program.mode() {
        return Err(DemoError::ModeMismatch {
            program: program.name().into(),
            expected: program.mode(),
            given: cfg.mode,
        });
    }
    fn finish<S>(program: Program, context: &ContextRef, cfg: RunConfig, run: Run<S, i64>) -> (i64, Trace, Report) {
        let report = Report {
            program: program.name().into(),
            context: context.label(),
            mode: cfg.mode,
            via: cfg.via,
            policy: program.policy_name().into(),
            result: run.result,
            verdicts: verdicts(program, context, &run.local, run.result, &run.diagnostics, &run.audit),
            trace: run.local.clone(),
            diagnostics: run.diagnostics,
            audit: run.audit,
            responses: run.world.responses().clone(),
            console: run.world.console().to_vec(),
        };
        (run.result, run.local, report)
    }
    Ok(match program {
        Program::WebServer(v) => {
            let c = web_context(context)?;
            let run = run_prog_first(&webserver::interface(v), &webserver::web_server(cfg.max_iterations), &c, w, cfg.via);
            finish(program, context, cfg, run)
        }
        Program::Logging => {
            let c = log_context(context)?;
            let run = run_ctx_first(&logging::interface(), &logging::logger(), &c, w, cfg.via);
            finish(program, context, cfg, run)
        }
        Program::Zip { close_early } => {
            let c = zip_context(context)?;
            let run = run_prog_first(&zip::interface(), &zip::zip_program(close_early), &c, w, cfg.via);
            finish(program, context, cfg, run)
        }
    })
}

pub fn run(program: Program, context: &ContextRef, cfg: RunConfig, w: World) -> Result<Report, DemoError> {
    run_raw(program, context, cfg, w).map(|(_, _, r)| r)
}

/// A world on which the whole-run guarantee failed.
#[derive(Debug, Clone)]
pub struct Violation {
    pub world: String,
    pub trace: Trace,
    pub result: i64,
}

/// A property of whole runs by name: `psi` or the guarantee's own name, or
/// one of the properties a program does not promise.
pub fn property(program: Program, name: &str) -> Option<TraceProperty> {
    let guarantee = psi(program);
    if name == "psi" || name == guarantee.name() {
        return Some(guarantee.into());
    }
    match (program, name) {
        (Program::WebServer(_), "every_connection_answered") => Some(TraceProperty::new(name, |lt, _| {
            webserver::every_connection_answered(lt)
        })),
        _ => None,
    }
}

/// Runs the pair in every world and returns the first `(trace, result)`
/// outside the program's guarantee.
pub fn find_violation(
    program: Program,
    context: &ContextRef,
    via: Via,
    worlds: &[ScriptedWorld],
) -> Result<Option<Violation>, DemoError> {
    find_violation_of(program, context, via, worlds, &psi(program).into())
}

/// As [`find_violation`], for any property.
pub fn find_violation_of(
    program: Program,
    context: &ContextRef,
    via: Via,
    worlds: &[ScriptedWorld],
    prop: &TraceProperty,
) -> Result<Option<Violation>, DemoError> {
    for w in worlds {
        let cfg = RunConfig {
            mode: program.mode(),
            via,
            max_iterations: w.max_iterations,
        };
        let (result, trace, _) = run_raw(program, context, cfg, w.world.clone())?;
        if !prop.holds(&trace, result) {
            return Ok(Some(Violation {
                world: w.name.into(),
                trace,
                result,
            }));
        }
    }
    Ok(None)
}

/// The scripted worlds each program is exercised against.
pub fn default_worlds(program: Program) -> Vec<ScriptedWorld> {
    match program {
        Program::WebServer(_) => worlds::web_worlds(),
        Program::Logging => worlds::log_worlds(),
        Program::Zip { .. } => worlds::zip_worlds(),
    }
}
