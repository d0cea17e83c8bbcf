//! Interfaces, compilation and linking in both directions.
//!
//! In the program-first setting the program owns control and receives the
//! context as a (checked) value; in the context-first setting the context
//! owns control and receives the program as a library.

use std::sync::Arc;

use crate::contracts::{
    export, import, make_checks_eff, validate, ArrowSpec, CheckTree, ConstraintReport, ContractBundle, ContractError,
    DynValue, EffCheckTree, Polarity, TypeDesc, ValidationConfig,
};
use crate::effect::{Comp, ErrCode, ProgIo};
use crate::monitor::{enforce_policy, MStateDesc, MonitorState, Policy, SecureIo};
use crate::traces::{PolicySpec, PostCond};

/// What the program assumes about its context and guarantees about the
/// whole run.
pub struct SourceInterface<S> {
    pub name: String,
    pub ctype: TypeDesc,
    pub specs: Vec<ArrowSpec<S>>,
    pub sigma: PolicySpec,
    pub pi: Policy<S>,
    pub cks: CheckTree<S>,
    pub psi: PostCond,
    pub mstate: MStateDesc<S>,
}

impl<S: MonitorState> Clone for SourceInterface<S> {
    fn clone(&self) -> Self {
        SourceInterface {
            name: self.name.clone(),
            ctype: self.ctype.clone(),
            specs: self.specs.clone(),
            sigma: self.sigma.clone(),
            pi: self.pi.clone(),
            cks: self.cks.clone(),
            psi: self.psi.clone(),
            mstate: self.mstate.clone(),
        }
    }
}

impl<S: MonitorState> SourceInterface<S> {
    pub fn bundle(&self) -> ContractBundle<S> {
        ContractBundle {
            name: self.name.clone(),
            ty: self.ctype.clone(),
            cks: self.cks.clone(),
            specs: self.specs.clone(),
            sigma: self.sigma.clone(),
            pi: self.pi.clone(),
            mstate: self.mstate.clone(),
            root: Polarity::Import,
        }
    }

    pub fn validate(&self, cfg: &ValidationConfig) -> Result<ConstraintReport, ContractError> {
        validate(&self.bundle(), cfg)
    }
}

/// The interface the context is compiled against: the boundary type with
/// its specifications erased, and the monitor that guards its IO.
pub struct TargetInterface<S> {
    pub ctype: TypeDesc,
    pub sigma: PolicySpec,
    pub pi: Policy<S>,
    pub mstate: MStateDesc<S>,
}

pub fn compile_interface<S: MonitorState>(i: &SourceInterface<S>) -> TargetInterface<S> {
    TargetInterface {
        ctype: i.ctype.clone(),
        sigma: i.sigma.clone(),
        pi: i.pi.clone(),
        mstate: i.mstate.clone(),
    }
}

/// A program receiving its context already checked. An `Err` means the
/// context failed its first-order checks at the boundary.
pub type SourceProg<S> = Arc<dyn Fn(ProgIo, Result<DynValue<S>, ErrCode>) -> Comp<S, i64> + Send + Sync>;
pub type TargetProg<S> = Arc<dyn Fn(DynValue<S>) -> Comp<S, i64> + Send + Sync>;
pub type SourceCtx<S> = Arc<dyn Fn(SecureIo<S>, EffCheckTree<S>) -> Result<DynValue<S>, ErrCode> + Send + Sync>;
pub type TargetCtx<S> = Arc<dyn Fn(SecureIo<S>) -> DynValue<S> + Send + Sync>;
pub type Whole<S> = Comp<S, i64>;

pub fn compile_prog<S: MonitorState>(i: &SourceInterface<S>, p: SourceProg<S>) -> TargetProg<S> {
    let ctype = i.ctype.clone();
    let cks = i.cks.clone();
    Arc::new(move |c| p(ProgIo::new(), import(&ctype, &make_checks_eff(&cks), c)))
}

pub fn link_target<S: MonitorState>(i: &TargetInterface<S>, p: &TargetProg<S>, c: &TargetCtx<S>) -> Whole<S> {
    p(c(enforce_policy(i.pi.clone())))
}

/// Links at the source level and returns the post-condition the whole run
/// is expected to satisfy alongside it.
pub fn link_source<S: MonitorState>(i: &SourceInterface<S>, p: &SourceProg<S>, c: &SourceCtx<S>) -> (PostCond, Whole<S>) {
    let ctx = c(enforce_policy(i.pi.clone()), make_checks_eff(&i.cks));
    (i.psi.clone(), p(ProgIo::new(), ctx))
}

pub fn back_translate_ctx<S: MonitorState>(i: &SourceInterface<S>, c: TargetCtx<S>) -> SourceCtx<S> {
    let ctype = i.ctype.clone();
    Arc::new(move |sec, eff| import(&ctype, &eff, c(sec)))
}

/// Interface for the context-first setting, where the boundary value is
/// the program.
pub struct DualInterface<S> {
    pub name: String,
    pub ptype: TypeDesc,
    pub specs: Vec<ArrowSpec<S>>,
    pub sigma: PolicySpec,
    pub pi: Policy<S>,
    pub cks: CheckTree<S>,
    pub mstate: MStateDesc<S>,
}

impl<S: MonitorState> Clone for DualInterface<S> {
    fn clone(&self) -> Self {
        DualInterface {
            name: self.name.clone(),
            ptype: self.ptype.clone(),
            specs: self.specs.clone(),
            sigma: self.sigma.clone(),
            pi: self.pi.clone(),
            cks: self.cks.clone(),
            mstate: self.mstate.clone(),
        }
    }
}

impl<S: MonitorState> DualInterface<S> {
    pub fn bundle(&self) -> ContractBundle<S> {
        ContractBundle {
            name: self.name.clone(),
            ty: self.ptype.clone(),
            cks: self.cks.clone(),
            specs: self.specs.clone(),
            sigma: self.sigma.clone(),
            pi: self.pi.clone(),
            mstate: self.mstate.clone(),
            root: Polarity::Export,
        }
    }

    pub fn validate(&self, cfg: &ValidationConfig) -> Result<ConstraintReport, ContractError> {
        validate(&self.bundle(), cfg)
    }

    /// The whole-run guarantee in this setting: every event respects Σ.
    pub fn psi(&self) -> PostCond {
        PostCond::enforced(self.sigma.clone())
    }

    pub fn target(&self) -> TargetInterface<S> {
        TargetInterface {
            ctype: self.ptype.clone(),
            sigma: self.sigma.clone(),
            pi: self.pi.clone(),
            mstate: self.mstate.clone(),
        }
    }
}

pub type DualSourceProg<S> = Arc<dyn Fn(ProgIo) -> DynValue<S> + Send + Sync>;
pub type DualTargetCtx<S> = Arc<dyn Fn(SecureIo<S>, DynValue<S>) -> Comp<S, i64> + Send + Sync>;
pub type DualSourceCtx<S> = Arc<dyn Fn(SecureIo<S>, EffCheckTree<S>, DynValue<S>) -> Comp<S, i64> + Send + Sync>;

/// The compiled program is the exported library value.
pub fn compile_prog_dual<S: MonitorState>(i: &DualInterface<S>, p: &DualSourceProg<S>) -> DynValue<S> {
    export(&i.ptype, &make_checks_eff(&i.cks), p(ProgIo::new()))
}

pub fn link_target_dual<S: MonitorState>(i: &TargetInterface<S>, p: DynValue<S>, c: &DualTargetCtx<S>) -> Whole<S> {
    c(enforce_policy(i.pi.clone()), p)
}

pub fn link_source_dual<S: MonitorState>(i: &DualInterface<S>, p: &DualSourceProg<S>, c: &DualSourceCtx<S>) -> (PostCond, Whole<S>) {
    let whole = c(enforce_policy(i.pi.clone()), make_checks_eff(&i.cks), p(ProgIo::new()));
    (i.psi(), whole)
}

pub fn back_translate_ctx_dual<S: MonitorState>(i: &DualInterface<S>, c: DualTargetCtx<S>) -> DualSourceCtx<S> {
    let ptype = i.ptype.clone();
    Arc::new(move |sec, eff, p| c(sec, export(&ptype, &eff, p)))
}
