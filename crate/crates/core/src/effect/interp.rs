use serde::Serialize;

use super::comp::{Comp, Node};
use super::event::{Caller, Event, Provenance};
use super::trace::{History, Trace};
use super::world::World;
use crate::monitor::{MStateDesc, MonitorState};

/// Counters kept by the interpreter for the capability audit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Audit {
    /// IO calls that arrived through a monitor handle.
    pub mediated_calls: usize,
    pub ctx_events: usize,
    pub prog_events: usize,
    pub mstate_reads: usize,
}

impl Audit {
    /// Every Ctx event went through the monitor and nothing else did.
    pub fn capability_discipline_holds(&self) -> bool {
        self.mediated_calls == self.ctx_events
    }
}

/// An interpreter run in progress: the world, the ghost history, the monitor
/// state and the diagnostics emitted by the enforcement layer.
pub struct Machine<'d, S> {
    desc: &'d MStateDesc<S>,
    world: World,
    history: History,
    state: S,
    diagnostics: Vec<Provenance>,
    audit: Audit,
    ghost_checks: bool,
}

impl<'d, S: MonitorState> Machine<'d, S> {
    /// Ghost checks default to on in debug builds.
    pub fn new(world: World, desc: &'d MStateDesc<S>) -> Self {
        Machine {
            desc,
            world,
            history: History::empty(),
            state: desc.init().clone(),
            diagnostics: Vec::new(),
            audit: Audit::default(),
            ghost_checks: cfg!(debug_assertions),
        }
    }

    pub fn with_ghost_checks(mut self, on: bool) -> Self {
        self.ghost_checks = on;
        self
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn state(&self) -> &S {
        &self.state
    }

    pub fn diagnostics(&self) -> &[Provenance] {
        &self.diagnostics
    }

    pub fn audit(&self) -> Audit {
        self.audit
    }

    fn check_ghost(&self) {
        if self.ghost_checks {
            assert!(
                self.desc.abstracts(&self.state, &self.history),
                "monitor state {:?} does not abstract a history of {} events",
                self.state,
                self.history.len()
            );
        }
    }

    /// Runs `c` to completion and returns its value and local trace.
    pub fn run<A: 'static>(&mut self, c: Comp<S, A>) -> (A, Trace) {
        let mut local = Trace::new();
        let mut c = c;
        loop {
            match c.0 {
                Node::Return(a) => return (a, local),
                Node::Io {
                    caller,
                    call,
                    mediated,
                    cont,
                } => {
                    debug_assert!(
                        caller == Caller::Prog || mediated,
                        "Ctx-tagged call built outside the monitor"
                    );
                    let result = self.world.perform(caller, &call);
                    let event = Event::new(caller, call, result.clone());
                    self.state = self.desc.update(&self.state, &event);
                    self.history.push(event.clone());
                    local.push(event);
                    if mediated {
                        self.audit.mediated_calls += 1;
                    }
                    match caller {
                        Caller::Ctx => self.audit.ctx_events += 1,
                        Caller::Prog => self.audit.prog_events += 1,
                    }
                    self.check_ghost();
                    c = cont(result);
                }
                Node::GetMState(cont) => {
                    self.audit.mstate_reads += 1;
                    self.check_ghost();
                    c = cont(self.state.clone());
                }
                Node::Note(p, next) => {
                    self.diagnostics.push(p);
                    c = next();
                }
            }
        }
    }

    pub fn finish(self) -> (World, History, S, Vec<Provenance>, Audit) {
        (self.world, self.history, self.state, self.diagnostics, self.audit)
    }
}

/// Everything a complete run produces.
#[derive(Debug, Clone)]
pub struct Run<S, A> {
    pub result: A,
    pub world: World,
    /// The full history, read most-recent-first.
    pub history: History,
    /// The same events, oldest first.
    pub local: Trace,
    pub state: S,
    pub diagnostics: Vec<Provenance>,
    pub audit: Audit,
}

/// Interprets `c` from an empty history in world `w`.
pub fn interpret<S: MonitorState, A: 'static>(c: Comp<S, A>, w: World, desc: &MStateDesc<S>) -> Run<S, A> {
    let mut m = Machine::new(w, desc);
    let (result, local) = m.run(c);
    let (world, history, state, diagnostics, audit) = m.finish();
    Run {
        result,
        world,
        history,
        local,
        state,
        diagnostics,
        audit,
    }
}
