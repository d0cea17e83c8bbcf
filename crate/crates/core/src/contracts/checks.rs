use std::fmt;
use std::sync::Arc;

use super::value::{DynFn, DynValue, TypeDesc};
use crate::effect::{Comp, ErrCode, Mechanism, Provenance};
use crate::monitor::MonitorState;

type PredFn<S> = dyn Fn(&DynValue<S>, &S, &DynValue<S>, &S) -> bool + Send + Sync;
type GateFn<S> = dyn Fn(&DynValue<S>, &S) -> bool + Send + Sync;

/// A boolean check over an argument, the state before a call, the call's
/// result and the state after it.
///
/// A check may also carry a gate over the argument and the state before the
/// call. Wrappers refuse to run the call when the gate fails; this is how a
/// requirement on an imported function is checked defensively.
pub struct Check<S> {
    label: String,
    pred: Arc<PredFn<S>>,
    requires: Option<Arc<GateFn<S>>>,
}

impl<S> Clone for Check<S> {
    fn clone(&self) -> Self {
        Check {
            label: self.label.clone(),
            pred: self.pred.clone(),
            requires: self.requires.clone(),
        }
    }
}

impl<S> fmt::Debug for Check<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Check({})", self.label)
    }
}

impl<S: 'static> Check<S> {
    pub fn new(
        label: impl Into<String>,
        pred: impl Fn(&DynValue<S>, &S, &DynValue<S>, &S) -> bool + Send + Sync + 'static,
    ) -> Self {
        Check {
            label: label.into(),
            pred: Arc::new(pred),
            requires: None,
        }
    }

    /// A check that accepts everything.
    pub fn always(label: impl Into<String>) -> Self {
        Check::new(label, |_, _, _, _| true)
    }

    pub fn with_requires(mut self, gate: impl Fn(&DynValue<S>, &S) -> bool + Send + Sync + 'static) -> Self {
        self.requires = Some(Arc::new(gate));
        self
    }

    /// The same check with predicate and gate replaced by `true`.
    pub fn weakened(&self) -> Self {
        Check::always(self.label.clone())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &DynValue<S>, s0: &S, y: &DynValue<S>, s1: &S) -> bool {
        (self.pred)(x, s0, y, s1)
    }

    pub fn admits(&self, x: &DynValue<S>, s0: &S) -> bool {
        self.requires.as_ref().is_none_or(|g| g(x, s0))
    }

    pub fn has_gate(&self) -> bool {
        self.requires.is_some()
    }
}

/// Checks laid out along the structure of a [`TypeDesc`]: `Node` at arrows
/// that carry a check, `EmptyNode` at structural positions, `Leaf` where
/// nothing below needs checking.
pub enum CheckTree<S> {
    Leaf,
    EmptyNode(Box<CheckTree<S>>, Box<CheckTree<S>>),
    Node(Check<S>, Box<CheckTree<S>>, Box<CheckTree<S>>),
}

impl<S> Clone for CheckTree<S> {
    fn clone(&self) -> Self {
        match self {
            CheckTree::Leaf => CheckTree::Leaf,
            CheckTree::EmptyNode(l, r) => CheckTree::EmptyNode(l.clone(), r.clone()),
            CheckTree::Node(c, l, r) => CheckTree::Node(c.clone(), l.clone(), r.clone()),
        }
    }
}

impl<S> fmt::Debug for CheckTree<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckTree::Leaf => f.write_str("Leaf"),
            CheckTree::EmptyNode(l, r) => write!(f, "EmptyNode({l:?}, {r:?})"),
            CheckTree::Node(c, l, r) => write!(f, "Node({}, {l:?}, {r:?})", c.label),
        }
    }
}

impl<S: 'static> CheckTree<S> {
    pub fn node(ck: Check<S>, l: CheckTree<S>, r: CheckTree<S>) -> Self {
        CheckTree::Node(ck, Box::new(l), Box::new(r))
    }

    pub fn empty(l: CheckTree<S>, r: CheckTree<S>) -> Self {
        CheckTree::EmptyNode(Box::new(l), Box::new(r))
    }

    /// The tree fits `td`: nodes only at arrows, empty nodes only at
    /// compound types.
    pub fn fits(&self, td: &TypeDesc) -> bool {
        match (self, td) {
            (CheckTree::Leaf, _) => true,
            (CheckTree::EmptyNode(l, r), TypeDesc::Pair(a, b))
            | (CheckTree::EmptyNode(l, r), TypeDesc::Either(a, b))
            | (CheckTree::EmptyNode(l, r), TypeDesc::Arrow(a, b))
            | (CheckTree::Node(_, l, r), TypeDesc::Arrow(a, b)) => l.fits(a) && r.fits(b),
            (CheckTree::EmptyNode(l, r), TypeDesc::Option(a)) => l.fits(a) && r.fits(&TypeDesc::Unit),
            _ => false,
        }
    }

    /// Every check in the tree, in pre-order.
    pub fn checks(&self) -> Vec<&Check<S>> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a Check<S>>) {
        match self {
            CheckTree::Leaf => {}
            CheckTree::EmptyNode(l, r) => {
                l.collect(out);
                r.collect(out);
            }
            CheckTree::Node(c, l, r) => {
                out.push(c);
                l.collect(out);
                r.collect(out);
            }
        }
    }

    /// Rebuilds the tree with `f` applied to every check.
    pub fn map_checks(&self, f: &impl Fn(&Check<S>) -> Check<S>) -> CheckTree<S> {
        match self {
            CheckTree::Leaf => CheckTree::Leaf,
            CheckTree::EmptyNode(l, r) => CheckTree::empty(l.map_checks(f), r.map_checks(f)),
            CheckTree::Node(c, l, r) => CheckTree::node(f(c), l.map_checks(f), r.map_checks(f)),
        }
    }
}

/// Monitor state captured by a check. Enforcement code never branches on
/// it; it exists so tests can inspect what the check saw.
#[derive(Debug, Clone, PartialEq)]
pub struct Ghost<S>(S);

impl<S> Ghost<S> {
    pub fn peek(&self) -> &S {
        &self.0
    }
}

/// First phase of an effectful check: the state before the call, the gate
/// verdict, and the continuation that finishes the check.
pub struct Setup<S> {
    pub s0: Ghost<S>,
    pub admitted: bool,
    pub pending: PendingCheck<S>,
}

pub struct PendingCheck<S> {
    check: Check<S>,
    x: DynValue<S>,
    s0: S,
}

impl<S: MonitorState> PendingCheck<S> {
    /// Second phase: reads the state after the call and decides.
    pub fn finish(self, y: DynValue<S>) -> Comp<S, (Ghost<S>, bool)> {
        Comp::get_mstate().map(move |s1: S| {
            let verdict = self.check.eval(&self.x, &self.s0, &y, &s1);
            (Ghost(s1), verdict)
        })
    }
}

/// A check turned into a pair of silent computations around a call.
pub struct EffCheck<S> {
    check: Check<S>,
}

impl<S> Clone for EffCheck<S> {
    fn clone(&self) -> Self {
        EffCheck {
            check: self.check.clone(),
        }
    }
}

impl<S: MonitorState> EffCheck<S> {
    pub fn label(&self) -> &str {
        self.check.label()
    }

    pub fn setup(&self, x: DynValue<S>) -> Comp<S, Setup<S>> {
        let check = self.check.clone();
        Comp::get_mstate().map(move |s0: S| Setup {
            s0: Ghost(s0.clone()),
            admitted: check.admits(&x, &s0),
            pending: PendingCheck { check, x, s0 },
        })
    }
}

pub fn make_check_eff<S: MonitorState>(ck: &Check<S>) -> EffCheck<S> {
    EffCheck { check: ck.clone() }
}

/// [`CheckTree`] with every check made effectful.
pub enum EffCheckTree<S> {
    Leaf,
    EmptyNode(Arc<EffCheckTree<S>>, Arc<EffCheckTree<S>>),
    Node(EffCheck<S>, Arc<EffCheckTree<S>>, Arc<EffCheckTree<S>>),
}

impl<S> Clone for EffCheckTree<S> {
    fn clone(&self) -> Self {
        match self {
            EffCheckTree::Leaf => EffCheckTree::Leaf,
            EffCheckTree::EmptyNode(l, r) => EffCheckTree::EmptyNode(l.clone(), r.clone()),
            EffCheckTree::Node(c, l, r) => EffCheckTree::Node(c.clone(), l.clone(), r.clone()),
        }
    }
}

impl<S> EffCheckTree<S> {
    pub(crate) fn children(&self) -> (Arc<EffCheckTree<S>>, Arc<EffCheckTree<S>>) {
        match self {
            EffCheckTree::Leaf => (Arc::new(EffCheckTree::Leaf), Arc::new(EffCheckTree::Leaf)),
            EffCheckTree::EmptyNode(l, r) | EffCheckTree::Node(_, l, r) => (l.clone(), r.clone()),
        }
    }
}

pub fn make_checks_eff<S: MonitorState>(cks: &CheckTree<S>) -> EffCheckTree<S> {
    match cks {
        CheckTree::Leaf => EffCheckTree::Leaf,
        CheckTree::EmptyNode(l, r) => EffCheckTree::EmptyNode(Arc::new(make_checks_eff(l)), Arc::new(make_checks_eff(r))),
        CheckTree::Node(c, l, r) => EffCheckTree::Node(
            make_check_eff(c),
            Arc::new(make_checks_eff(l)),
            Arc::new(make_checks_eff(r)),
        ),
    }
}

/// Emits a diagnostic and yields `Inr Contract_failure`.
pub(crate) fn refuse<S: MonitorState>(p: Provenance) -> Comp<S, DynValue<S>> {
    Comp::<S, ()>::note(p.clone()).map(move |_| DynValue::fail(ErrCode::ContractFailure(Some(p))))
}

/// Guards `f` with a pre-check: `f` only runs when the check, evaluated with
/// a unit result and no intervening call, accepts.
pub fn enforce_pre<S: MonitorState>(eff: &EffCheck<S>, f: DynFn<S>) -> DynFn<S> {
    let eff = eff.clone();
    DynFn::new(move |x: DynValue<S>| {
        let f = f.clone();
        let label = eff.label().to_string();
        eff.setup(x.clone()).bind(move |st| {
            let admitted = st.admitted;
            st.pending.finish(DynValue::Unit).bind(move |(_, ok)| {
                if ok && admitted {
                    f.apply(x)
                } else {
                    refuse(Provenance::new(Mechanism::PreContract, label))
                }
            })
        })
    })
}

/// Guards `f` with a post-check: the state is captured before the call and
/// the result is replaced by `Inr Contract_failure` if the check rejects
/// it afterwards.
pub fn enforce_post<S: MonitorState>(eff: &EffCheck<S>, f: DynFn<S>) -> DynFn<S> {
    let eff = eff.clone();
    DynFn::new(move |x: DynValue<S>| {
        let f = f.clone();
        let label = eff.label().to_string();
        eff.setup(x.clone()).bind(move |st| {
            if !st.admitted {
                return refuse(Provenance::new(Mechanism::PreContract, label));
            }
            let pending = st.pending;
            f.apply(x).bind(move |r| {
                pending.finish(r.clone()).bind(move |(_, ok)| {
                    if ok {
                        Comp::ret(r)
                    } else {
                        refuse(Provenance::new(Mechanism::PostContract, label))
                    }
                })
            })
        })
    })
}
