//! Executable trace predicates: access-control specifications over
//! histories, post-conditions over local traces, and behaviours of whole
//! programs over a finite sample of worlds.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::effect::{interpret, Caller, Comp, Event, History, IoCall, IoOp, Trace, World};
use crate::monitor::{MStateDesc, MonitorState};

type SigmaFn = dyn Fn(&History, Caller, &IoCall) -> bool + Send + Sync;
type PostFn = dyn Fn(&History, i64, &Trace) -> bool + Send + Sync;
type PropFn = dyn Fn(&Trace, i64) -> bool + Send + Sync;

/// A decidable access-control specification over histories (Σ).
#[derive(Clone)]
pub struct PolicySpec {
    name: String,
    pred: Arc<SigmaFn>,
}

impl PolicySpec {
    pub fn new(name: impl Into<String>, pred: impl Fn(&History, Caller, &IoCall) -> bool + Send + Sync + 'static) -> Self {
        PolicySpec {
            name: name.into(),
            pred: Arc::new(pred),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn holds(&self, h: &History, caller: Caller, call: &IoCall) -> bool {
        (self.pred)(h, caller, call)
    }
}

impl fmt::Debug for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolicySpec({})", self.name)
    }
}

/// A post-condition of a whole program: starting history, result, local
/// trace.
#[derive(Clone)]
pub struct PostCond {
    name: String,
    pred: Arc<PostFn>,
}

impl PostCond {
    pub fn new(name: impl Into<String>, pred: impl Fn(&History, i64, &Trace) -> bool + Send + Sync + 'static) -> Self {
        PostCond {
            name: name.into(),
            pred: Arc::new(pred),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn holds(&self, h: &History, r: i64, lt: &Trace) -> bool {
        (self.pred)(h, r, lt)
    }

    /// The post-condition that only looks at the local trace.
    pub fn from_trace(name: impl Into<String>, p: impl Fn(&Trace) -> bool + Send + Sync + 'static) -> Self {
        PostCond::new(name, move |_, _, lt| p(lt))
    }

    /// `enforced_locally sigma h lt`, ignoring the result.
    pub fn enforced(sigma: PolicySpec) -> Self {
        let name = format!("enforced_locally({})", sigma.name());
        PostCond::new(name, move |h, _, lt| enforced_locally(&sigma, h, lt))
    }
}

impl fmt::Debug for PostCond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PostCond({})", self.name)
    }
}

/// A predicate on complete executions.
#[derive(Clone)]
pub struct TraceProperty {
    name: String,
    pred: Arc<PropFn>,
}

impl TraceProperty {
    pub fn new(name: impl Into<String>, pred: impl Fn(&Trace, i64) -> bool + Send + Sync + 'static) -> Self {
        TraceProperty {
            name: name.into(),
            pred: Arc::new(pred),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn holds(&self, lt: &Trace, r: i64) -> bool {
        (self.pred)(lt, r)
    }
}

impl From<PostCond> for TraceProperty {
    fn from(psi: PostCond) -> Self {
        let name = psi.name.clone();
        TraceProperty::new(name, move |lt, r| psi.holds(&History::empty(), r, lt))
    }
}

/// Every event of `lt` is allowed by `sigma` against the history extended
/// with the events before it.
pub fn enforced_locally(sigma: &PolicySpec, h: &History, lt: &Trace) -> bool {
    let mut h = h.clone();
    for e in lt {
        if !sigma.holds(&h, e.caller, &e.call) {
            return false;
        }
        h.push(e.clone());
    }
    true
}

/// Only the Ctx events of `lt` are checked against `sigma`; program events
/// extend the history but are not judged.
pub fn ctx_events_respect(sigma: &PolicySpec, h: &History, lt: &Trace) -> bool {
    let mut h = h.clone();
    for e in lt {
        if e.caller == Caller::Ctx && !sigma.holds(&h, e.caller, &e.call) {
            return false;
        }
        h.push(e.clone());
    }
    true
}

/// Each request the program read successfully is later answered by a write
/// on the same descriptor. Reads issued by the context are its own file
/// accesses and carry no obligation.
pub fn every_request_gets_a_response(lt: &Trace) -> bool {
    let mut read_fds = Vec::new();
    for e in lt {
        match (&e.call, &e.result) {
            (IoCall::Read(fd), Ok(_)) if e.caller == Caller::Prog => read_fds.push(*fd),
            (IoCall::Write(fd, _), _) => read_fds.retain(|r| r != fd),
            _ => {}
        }
    }
    read_fds.is_empty()
}

/// The executions of `whole` over a finite sample of worlds.
pub type Behavior = BTreeSet<(Trace, i64)>;

/// Runs a fresh copy of `whole` in every world and collects
/// (local trace, result) pairs.
pub fn beh<S: MonitorState>(whole: impl Fn() -> Comp<S, i64>, worlds: &[World], desc: &MStateDesc<S>) -> Behavior {
    worlds
        .iter()
        .map(|w| {
            let run = interpret(whole(), w.clone(), desc);
            (run.local, run.result)
        })
        .collect()
}

pub fn satisfies(behavior: &Behavior, psi: &PostCond) -> bool {
    first_violation(behavior, psi).is_none()
}

pub fn first_violation<'b>(behavior: &'b Behavior, psi: &PostCond) -> Option<&'b (Trace, i64)> {
    behavior.iter().find(|(lt, r)| !psi.holds(&History::empty(), *r, lt))
}

/// `path` lies strictly inside `dir` and never climbs back out of it.
pub fn in_folder(path: &str, dir: &str) -> bool {
    let dir = dir.trim_end_matches('/');
    match path.strip_prefix(dir) {
        Some(rest) => {
            rest.starts_with('/') && rest.len() > 1 && rest.split('/').all(|seg| seg != ".." && seg != ".")
        }
        None => false,
    }
}

/// The verdict of the most recent event `decide` has an opinion on.
pub(crate) fn latest_decides(h: &History, decide: impl FnMut(&Event) -> Option<bool>) -> Option<bool> {
    h.recent_first().find_map(decide)
}

/// The op name as the logging policy renders it.
pub fn op_label(op: IoOp) -> Vec<u8> {
    op.name().as_bytes().to_vec()
}
