//! Monitor states, state-level policies and the secure IO handle given to
//! untrusted contexts.

mod states;
mod webserver;

use std::fmt;
use std::sync::Arc;

use crate::effect::{Caller, Comp, ErrCode, Event, History, IoCall, IoResult, Mechanism, Provenance};

pub use states::{full_trace_mstate, last_event_mstate, stateless_mstate};
pub use webserver::{did_not_respond, is_opened_by_ctx, webserver_mstate, wrote_to, WebState};

/// Bounds every monitor state carrier must satisfy.
pub trait MonitorState: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {}
impl<T: Clone + fmt::Debug + PartialEq + Send + Sync + 'static> MonitorState for T {}

type UpdFn<S> = dyn Fn(&S, &Event) -> S + Send + Sync;
type AbsFn<S> = dyn Fn(&S, &History) -> bool + Send + Sync;

/// A monitor-state descriptor: the initial state, how each recorded event
/// updates it, and the relation saying a state faithfully summarises a
/// history.
///
/// The two laws every descriptor must obey are `abstracts(init, [])` and
/// `abstracts(s, h) => abstracts(upd(s, e), e :: h)`.
pub struct MStateDesc<S> {
    name: &'static str,
    init: S,
    upd: Arc<UpdFn<S>>,
    abstracts: Arc<AbsFn<S>>,
}

impl<S: Clone> Clone for MStateDesc<S> {
    fn clone(&self) -> Self {
        MStateDesc {
            name: self.name,
            init: self.init.clone(),
            upd: self.upd.clone(),
            abstracts: self.abstracts.clone(),
        }
    }
}

impl<S: MonitorState> MStateDesc<S> {
    pub fn new(
        name: &'static str,
        init: S,
        upd: impl Fn(&S, &Event) -> S + Send + Sync + 'static,
        abstracts: impl Fn(&S, &History) -> bool + Send + Sync + 'static,
    ) -> Self {
        MStateDesc {
            name,
            init,
            upd: Arc::new(upd),
            abstracts: Arc::new(abstracts),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn init(&self) -> &S {
        &self.init
    }

    pub fn update(&self, s: &S, e: &Event) -> S {
        (self.upd)(s, e)
    }

    pub fn abstracts(&self, s: &S, h: &History) -> bool {
        (self.abstracts)(s, h)
    }

    /// The state reached by feeding `h` through `upd` from `init`.
    pub fn replay(&self, h: &History) -> S {
        h.chronological().iter().fold(self.init.clone(), |s, e| self.update(&s, e))
    }
}

impl<S> fmt::Debug for MStateDesc<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MStateDesc({})", self.name)
    }
}

type DecideFn<S> = dyn Fn(&S, &IoCall) -> bool + Send + Sync;

/// A decidable access-control policy over monitor states (Π). Its
/// soundness obligation is that acceptance on a state implies Σ on every
/// history the state abstracts.
pub struct Policy<S> {
    name: String,
    decide: Arc<DecideFn<S>>,
}

impl<S> Clone for Policy<S> {
    fn clone(&self) -> Self {
        Policy {
            name: self.name.clone(),
            decide: self.decide.clone(),
        }
    }
}

impl<S> Policy<S> {
    pub fn new(name: impl Into<String>, decide: impl Fn(&S, &IoCall) -> bool + Send + Sync + 'static) -> Self {
        Policy {
            name: name.into(),
            decide: Arc::new(decide),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn allows(&self, s: &S, call: &IoCall) -> bool {
        (self.decide)(s, call)
    }
}

impl<S> fmt::Debug for Policy<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Policy({})", self.name)
    }
}

/// The only IO capability a context ever holds. Each call reads the monitor
/// state, consults the policy, and either performs the operation as `Ctx`
/// or answers `Contract_failure` without touching the world.
pub struct SecureIo<S> {
    policy: Policy<S>,
}

impl<S> Clone for SecureIo<S> {
    fn clone(&self) -> Self {
        SecureIo {
            policy: self.policy.clone(),
        }
    }
}

impl<S> fmt::Debug for SecureIo<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecureIo({})", self.policy.name)
    }
}

impl<S: MonitorState> SecureIo<S> {
    pub fn call(&self, call: IoCall) -> Comp<S, IoResult> {
        let policy = self.policy.clone();
        Comp::get_mstate().bind(move |s| {
            if policy.allows(&s, &call) {
                Comp::<S, IoResult>::call_io(Caller::Ctx, call, true)
            } else {
                let p = Provenance::new(Mechanism::Monitor, call.op().name());
                Comp::<S, ()>::note(p.clone()).map(move |_| Err(ErrCode::ContractFailure(Some(p))))
            }
        })
    }
}

/// Wraps the raw Ctx capability behind `pi`.
pub fn enforce_policy<S: MonitorState>(pi: Policy<S>) -> SecureIo<S> {
    SecureIo { policy: pi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect::{interpret, IoValue, World};

    fn only_temp() -> Policy<WebState> {
        Policy::new("temp-only", |_s: &WebState, call: &IoCall| {
            matches!(call, IoCall::Openfile { path, .. } if crate::traces::in_folder(path, "/temp"))
        })
    }

    #[test]
    fn denied_call_is_silent() {
        let sec = enforce_policy(only_temp());
        let run = interpret(sec.call(IoCall::open("/etc/passwd")), World::new(), &webserver_mstate());
        assert!(matches!(run.result, Err(ErrCode::ContractFailure(Some(ref p))) if p.mechanism == Mechanism::Monitor));
        assert!(run.local.is_empty());
        assert_eq!(run.state, WebState::default());
        assert_eq!(run.diagnostics.len(), 1);
    }

    #[test]
    fn allowed_call_is_one_ctx_event() {
        let sec = enforce_policy(only_temp());
        let w = World::new().with_file("/temp/f", b"f".to_vec());
        let run = interpret(sec.call(IoCall::open("/temp/f")), w, &webserver_mstate());
        assert_eq!(run.result, Ok(IoValue::Fd(3)));
        assert_eq!(run.local.len(), 1);
        assert_eq!(run.local.events()[0].caller, Caller::Ctx);
        assert!(run.audit.capability_discipline_holds());
        assert_eq!(run.audit.ctx_events, 1);
    }
}
