use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::checks::{Check, CheckTree};
use super::value::{DynValue, TypeDesc};
use super::ContractError;
use crate::effect::{Caller, ErrCode, History, Trace};
use crate::gen::{self, Pools};
use crate::monitor::{MStateDesc, MonitorState, Policy};
use crate::traces::{enforced_locally, PolicySpec};

/// Which side owns the function at a check site. Imported functions were
/// written by the context and get post-checks; exported ones were written
/// by the program and get pre-checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Polarity {
    Import,
    Export,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Import => Polarity::Export,
            Polarity::Export => Polarity::Import,
        }
    }
}

type PreFn<S> = dyn Fn(&DynValue<S>, &History) -> bool + Send + Sync;
type PostFn<S> = dyn Fn(&DynValue<S>, &History, &DynValue<S>, &Trace) -> bool + Send + Sync;

/// The trace-level specification of one checked arrow: a pre-condition
/// over argument and history, and a post-condition over argument, history,
/// result and local trace.
pub struct ArrowSpec<S> {
    pub label: String,
    pub pre: Arc<PreFn<S>>,
    pub post: Arc<PostFn<S>>,
}

impl<S> Clone for ArrowSpec<S> {
    fn clone(&self) -> Self {
        ArrowSpec {
            label: self.label.clone(),
            pre: self.pre.clone(),
            post: self.post.clone(),
        }
    }
}

impl<S> ArrowSpec<S> {
    pub fn new(
        label: impl Into<String>,
        pre: impl Fn(&DynValue<S>, &History) -> bool + Send + Sync + 'static,
        post: impl Fn(&DynValue<S>, &History, &DynValue<S>, &Trace) -> bool + Send + Sync + 'static,
    ) -> Self {
        ArrowSpec {
            label: label.into(),
            pre: Arc::new(pre),
            post: Arc::new(post),
        }
    }
}

/// Everything the validation suite needs about one side of a boundary.
pub struct ContractBundle<S> {
    pub name: String,
    pub ty: TypeDesc,
    pub cks: CheckTree<S>,
    pub specs: Vec<ArrowSpec<S>>,
    pub sigma: PolicySpec,
    pub pi: Policy<S>,
    pub mstate: MStateDesc<S>,
    /// `Import` when the boundary value comes from the context.
    pub root: Polarity,
}

impl<S: MonitorState> Clone for ContractBundle<S> {
    fn clone(&self) -> Self {
        ContractBundle {
            name: self.name.clone(),
            ty: self.ty.clone(),
            cks: self.cks.clone(),
            specs: self.specs.clone(),
            sigma: self.sigma.clone(),
            pi: self.pi.clone(),
            mstate: self.mstate.clone(),
            root: self.root,
        }
    }
}

/// One checked arrow with its position, polarity and specification.
pub struct Obligation<S> {
    pub label: String,
    pub polarity: Polarity,
    pub dom: TypeDesc,
    pub cod: TypeDesc,
    pub check: Check<S>,
    pub spec: ArrowSpec<S>,
}

impl<S: MonitorState> ContractBundle<S> {
    /// Checks the structural invariants: boundary-shaped type, fitting
    /// tree, a spec for every check.
    pub fn validate_shape(&self) -> Result<(), ContractError> {
        if !self.ty.is_boundary_type() {
            return Err(ContractError::NotBoundaryType(self.ty.to_string()));
        }
        if !self.cks.fits(&self.ty) {
            return Err(ContractError::ShapeMismatch(self.ty.to_string()));
        }
        self.obligations().map(|_| ())
    }

    pub fn obligations(&self) -> Result<Vec<Obligation<S>>, ContractError> {
        let mut out = Vec::new();
        self.walk(&self.ty, &self.cks, self.root, &mut out)?;
        Ok(out)
    }

    fn walk(&self, td: &TypeDesc, cks: &CheckTree<S>, pol: Polarity, out: &mut Vec<Obligation<S>>) -> Result<(), ContractError> {
        match (cks, td) {
            (CheckTree::Leaf, _) => Ok(()),
            (CheckTree::EmptyNode(l, r), TypeDesc::Pair(a, b)) | (CheckTree::EmptyNode(l, r), TypeDesc::Either(a, b)) => {
                self.walk(a, l, pol, out)?;
                self.walk(b, r, pol, out)
            }
            (CheckTree::EmptyNode(l, _), TypeDesc::Option(a)) => self.walk(a, l, pol, out),
            (CheckTree::EmptyNode(l, r), TypeDesc::Arrow(a, b)) => {
                self.walk(a, l, pol.flip(), out)?;
                self.walk(b, r, pol, out)
            }
            (CheckTree::Node(ck, l, r), TypeDesc::Arrow(a, b)) => {
                let spec = self
                    .specs
                    .iter()
                    .find(|s| s.label == ck.label())
                    .ok_or_else(|| ContractError::MissingSpec(ck.label().to_string()))?;
                out.push(Obligation {
                    label: ck.label().to_string(),
                    polarity: pol,
                    dom: (**a).clone(),
                    cod: (**b).clone(),
                    check: ck.clone(),
                    spec: spec.clone(),
                });
                self.walk(a, l, pol.flip(), out)?;
                self.walk(b, r, pol, out)
            }
            _ => Err(ContractError::ShapeMismatch(td.to_string())),
        }
    }

    /// The same bundle with every check replaced by `true`.
    pub fn weakened(&self) -> ContractBundle<S> {
        let mut b = self.clone();
        b.name = format!("{}-weakened", self.name);
        b.cks = self.cks.map_checks(&|c| c.weakened());
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Constraint {
    /// Pre-check acceptance implies the pre-condition.
    CPre,
    /// Pre-condition and post-condition of an exported function imply Σ.
    CPost,
    /// Pre, Σ on the local trace and post-check acceptance imply the post.
    C1Post,
    /// Pre and Σ imply the post holds of `Inr Contract_failure`.
    C2Post,
    /// An import gate's acceptance implies the pre-condition.
    CGate,
    /// Policy acceptance implies Σ.
    PolicySound,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::CPre => "c_pre",
            Constraint::CPost => "c_post",
            Constraint::C1Post => "c1_post",
            Constraint::C2Post => "c2_post",
            Constraint::CGate => "c_gate",
            Constraint::PolicySound => "policy_sound",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintResult {
    pub constraint: Constraint,
    pub site: String,
    pub samples: usize,
    /// Samples whose antecedent held.
    pub exercised: usize,
    pub counterexamples: usize,
    pub first_counterexample: Option<String>,
}

impl ConstraintResult {
    pub fn passed(&self) -> bool {
        self.counterexamples == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintReport {
    pub bundle: String,
    pub results: Vec<ConstraintResult>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(ConstraintResult::passed)
    }

    pub fn counterexamples(&self) -> usize {
        self.results.iter().map(|r| r.counterexamples).sum()
    }
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bundle {}", self.bundle)?;
        for r in &self.results {
            writeln!(
                f,
                "  {:<4} {:<12} {:<20} samples={} exercised={} counterexamples={}",
                if r.passed() { "ok" } else { "FAIL" },
                r.constraint.to_string(),
                r.site,
                r.samples,
                r.exercised,
                r.counterexamples
            )?;
            if let Some(cx) = &r.first_counterexample {
                writeln!(f, "       first: {cx}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ValidationConfig {
    pub samples: usize,
    pub seed: u64,
    pub max_history: usize,
    pub max_local: usize,
    pub pools: Pools,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            samples: 10_000,
            seed: 0x5eed,
            max_history: 12,
            max_local: 6,
            pools: Pools::default(),
        }
    }
}

struct Tally {
    constraint: Constraint,
    site: String,
    samples: usize,
    exercised: usize,
    counterexamples: usize,
    first: Option<String>,
}

impl Tally {
    fn new(constraint: Constraint, site: &str) -> Self {
        Tally {
            constraint,
            site: site.to_string(),
            samples: 0,
            exercised: 0,
            counterexamples: 0,
            first: None,
        }
    }

    fn record(&mut self, antecedent: bool, consequent: bool, describe: impl FnOnce() -> String) {
        self.samples += 1;
        if antecedent {
            self.exercised += 1;
            if !consequent {
                self.counterexamples += 1;
                if self.first.is_none() {
                    self.first = Some(describe());
                }
            }
        }
    }

    fn done(self) -> ConstraintResult {
        ConstraintResult {
            constraint: self.constraint,
            site: self.site,
            samples: self.samples,
            exercised: self.exercised,
            counterexamples: self.counterexamples,
            first_counterexample: self.first,
        }
    }
}

fn render(h: &History, lt: Option<&Trace>) -> String {
    let h: Vec<String> = h.chronological().iter().map(|e| e.to_string()).collect();
    let mut s = format!("h=[{}]", h.join("; "));
    if let Some(lt) = lt {
        let lt: Vec<String> = lt.iter().map(|e| e.to_string()).collect();
        s.push_str(&format!(" lt=[{}]", lt.join("; ")));
    }
    s
}

/// Local traces from three sources: Σ-respecting random walks (most),
/// unconstrained random traces, and single events.
fn sample_local<R: Rng>(rng: &mut R, cfg: &ValidationConfig, sigma: &PolicySpec, h: &History) -> Trace {
    match rng.gen_range(0..10) {
        0..=5 => gen::guided_trace(rng, &cfg.pools, sigma, h, cfg.max_local),
        6..=7 => gen::random_trace(rng, &cfg.pools, cfg.max_local),
        _ => vec![gen::random_event(rng, &cfg.pools)].into(),
    }
}

/// Runs the randomized constraint suite over every obligation of `bundle`
/// plus the policy-soundness check.
pub fn validate<S: MonitorState>(bundle: &ContractBundle<S>, cfg: &ValidationConfig) -> Result<ConstraintReport, ContractError> {
    bundle.validate_shape()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut results = Vec::new();
    let sigma = &bundle.sigma;
    let desc = &bundle.mstate;

    for ob in bundle.obligations()? {
        let pre = &ob.spec.pre;
        let post = &ob.spec.post;
        match ob.polarity {
            Polarity::Export => {
                let mut t = Tally::new(Constraint::CPre, &ob.label);
                for _ in 0..cfg.samples {
                    let h = gen::random_history(&mut rng, &cfg.pools, cfg.max_history);
                    let x: DynValue<S> = gen::random_value(&mut rng, &ob.dom, &cfg.pools);
                    let s = desc.replay(&h);
                    let ant = ob.check.admits(&x, &s) && ob.check.eval(&x, &s, &DynValue::Unit, &s);
                    t.record(ant, pre(&x, &h), || format!("x={x} {}", render(&h, None)));
                }
                results.push(t.done());

                let mut t = Tally::new(Constraint::CPost, &ob.label);
                for _ in 0..cfg.samples {
                    let h = gen::random_history(&mut rng, &cfg.pools, cfg.max_history);
                    let x: DynValue<S> = gen::random_value(&mut rng, &ob.dom, &cfg.pools);
                    let r: DynValue<S> = gen::random_value(&mut rng, &ob.cod, &cfg.pools);
                    let lt = sample_local(&mut rng, cfg, sigma, &h);
                    let ant = pre(&x, &h) && post(&x, &h, &r, &lt);
                    t.record(ant, enforced_locally(sigma, &h, &lt), || {
                        format!("x={x} r={r} {}", render(&h, Some(&lt)))
                    });
                }
                results.push(t.done());
            }
            Polarity::Import => {
                let mut t = Tally::new(Constraint::C1Post, &ob.label);
                for _ in 0..cfg.samples {
                    let h = gen::random_history(&mut rng, &cfg.pools, cfg.max_history);
                    let x: DynValue<S> = gen::random_value(&mut rng, &ob.dom, &cfg.pools);
                    let r: DynValue<S> = gen::random_value(&mut rng, &ob.cod, &cfg.pools);
                    let lt = sample_local(&mut rng, cfg, sigma, &h);
                    let s0 = desc.replay(&h);
                    let s1 = desc.replay(&h.extended(&lt));
                    let ant = pre(&x, &h) && enforced_locally(sigma, &h, &lt) && ob.check.eval(&x, &s0, &r, &s1);
                    t.record(ant, post(&x, &h, &r, &lt), || {
                        format!("x={x} r={r} {}", render(&h, Some(&lt)))
                    });
                }
                results.push(t.done());

                let mut t = Tally::new(Constraint::C2Post, &ob.label);
                let cf: DynValue<S> = DynValue::fail(ErrCode::ContractFailure(None));
                for _ in 0..cfg.samples {
                    let h = gen::random_history(&mut rng, &cfg.pools, cfg.max_history);
                    let x: DynValue<S> = gen::random_value(&mut rng, &ob.dom, &cfg.pools);
                    let lt = sample_local(&mut rng, cfg, sigma, &h);
                    let ant = pre(&x, &h) && enforced_locally(sigma, &h, &lt);
                    t.record(ant, post(&x, &h, &cf, &lt), || format!("x={x} {}", render(&h, Some(&lt))));
                }
                results.push(t.done());

                if ob.check.has_gate() {
                    let mut t = Tally::new(Constraint::CGate, &ob.label);
                    for _ in 0..cfg.samples {
                        let h = gen::random_history(&mut rng, &cfg.pools, cfg.max_history);
                        let x: DynValue<S> = gen::random_value(&mut rng, &ob.dom, &cfg.pools);
                        let s = desc.replay(&h);
                        t.record(ob.check.admits(&x, &s), pre(&x, &h), || format!("x={x} {}", render(&h, None)));
                    }
                    results.push(t.done());
                }
            }
        }
    }

    let mut t = Tally::new(Constraint::PolicySound, bundle.pi.name());
    for _ in 0..cfg.samples {
        let h = gen::random_history(&mut rng, &cfg.pools, cfg.max_history);
        let call = gen::random_call(&mut rng, &cfg.pools);
        let s = desc.replay(&h);
        t.record(bundle.pi.allows(&s, &call), sigma.holds(&h, Caller::Ctx, &call), || {
            format!("call={call} {}", render(&h, None))
        });
    }
    results.push(t.done());

    Ok(ConstraintReport {
        bundle: bundle.name.clone(),
        results,
    })
}
