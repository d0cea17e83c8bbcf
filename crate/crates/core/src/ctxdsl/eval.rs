//! Translation of checked terms into host computations. Every IO operation
//! goes through the context's `SecureIo` handle; nothing else can perform IO.

use std::sync::Arc;

use super::syntax::{CtxExpr, CtxType, Lit};
use super::typeck::{prelude, Adapter};
use crate::contracts::{DynFn, DynValue};
use crate::demos::http;
use crate::effect::{Comp, ErrCode, IoCall, IoOp, SockOpt, STDOUT};
use crate::linker::{DualTargetCtx, TargetCtx};
use crate::monitor::{MonitorState, SecureIo};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Prim {
    Concat,
    RequestPath,
    HttpResponse,
    Add,
    Len,
    Stdout,
}

impl Prim {
    fn by_name(x: &str) -> Option<Prim> {
        Some(match x {
            "concat" => Prim::Concat,
            "request_path" => Prim::RequestPath,
            "http_response" => Prim::HttpResponse,
            "add" => Prim::Add,
            "len" => Prim::Len,
            "stdout" => Prim::Stdout,
            _ => return None,
        })
    }
}

/// Closed code with variables resolved to de Bruijn indices.
#[derive(Debug)]
enum Code {
    Var(usize),
    Prim(Prim),
    Lit(Lit),
    Lam(Arc<Code>),
    App(Arc<Code>, Arc<Code>),
    Pair(Arc<Code>, Arc<Code>),
    Fst(Arc<Code>),
    Snd(Arc<Code>),
    Inl(Arc<Code>),
    Inr(Arc<Code>),
    Case(Arc<Code>, Arc<Code>, Arc<Code>),
    Let(Arc<Code>, Arc<Code>),
    Io(IoOp, Arc<Code>),
}

fn compile(e: &CtxExpr, scope: &mut Vec<String>) -> Arc<Code> {
    let under = |scope: &mut Vec<String>, x: &str, body: &CtxExpr| {
        scope.push(x.to_string());
        let c = compile(body, scope);
        scope.pop();
        c
    };
    Arc::new(match e {
        CtxExpr::Var(x) => match scope.iter().rev().position(|y| y == x) {
            Some(i) => Code::Var(i),
            None => Code::Prim(Prim::by_name(x).expect("checked terms only mention bound names")),
        },
        CtxExpr::Lit(l) => Code::Lit(l.clone()),
        CtxExpr::Lam(x, _, body) => Code::Lam(under(scope, x, body)),
        CtxExpr::App(f, a) => Code::App(compile(f, scope), compile(a, scope)),
        CtxExpr::Pair(a, b) => Code::Pair(compile(a, scope), compile(b, scope)),
        CtxExpr::Fst(p) => Code::Fst(compile(p, scope)),
        CtxExpr::Snd(p) => Code::Snd(compile(p, scope)),
        CtxExpr::Inl(a) => Code::Inl(compile(a, scope)),
        CtxExpr::Inr(a) => Code::Inr(compile(a, scope)),
        CtxExpr::Case(s, x, l, y, r) => Code::Case(compile(s, scope), under(scope, x, l), under(scope, y, r)),
        CtxExpr::Let(x, a, b) => Code::Let(compile(a, scope), under(scope, x, b)),
        CtxExpr::Ann(inner, _) => return compile(inner, scope),
        CtxExpr::Io(op, a) => Code::Io(*op, compile(a, scope)),
    })
}

struct Frame<S> {
    val: DynValue<S>,
    next: Env<S>,
}

type Env<S> = Option<Arc<Frame<S>>>;

fn extend<S>(env: &Env<S>, val: DynValue<S>) -> Env<S> {
    Some(Arc::new(Frame { val, next: env.clone() }))
}

fn lookup<S>(env: &Env<S>, i: usize) -> DynValue<S> {
    let mut cur = env;
    for _ in 0..i {
        cur = &cur.as_ref().expect("index within scope").next;
    }
    cur.as_ref().expect("index within scope").val.clone()
}

/// Only reachable if a host value does not have the type it was promised.
fn stuck<S: MonitorState>() -> Comp<S, DynValue<S>> {
    Comp::ret(DynValue::fail(ErrCode::Einval))
}

fn fun<S: MonitorState>(f: impl Fn(DynValue<S>) -> DynValue<S> + Send + Sync + 'static) -> DynValue<S> {
    DynValue::Fun(DynFn::new(move |x| Comp::ret(f(x))))
}

fn fun2<S: MonitorState>(f: impl Fn(&DynValue<S>, &DynValue<S>) -> DynValue<S> + Send + Sync + 'static) -> DynValue<S> {
    let f = Arc::new(f);
    fun(move |a| {
        let f = f.clone();
        fun(move |b| f(&a, &b))
    })
}

fn prim_value<S: MonitorState>(p: Prim) -> DynValue<S> {
    let bytes = |v: &DynValue<S>| v.as_bytes().map(<[u8]>::to_vec).unwrap_or_default();
    let int = |v: &DynValue<S>| v.as_int().unwrap_or(0);
    match p {
        Prim::Concat => fun2(move |a, b| {
            let mut out = bytes(a);
            out.extend(bytes(b));
            DynValue::Bytes(out)
        }),
        Prim::RequestPath => fun(move |r| DynValue::Bytes(http::request_path(&bytes(&r)))),
        Prim::HttpResponse => fun2(move |s, b| DynValue::Bytes(http::http_response(int(s), &bytes(b)))),
        Prim::Add => fun2(move |a, b| DynValue::Int(int(a).wrapping_add(int(b)))),
        Prim::Len => fun(move |b| DynValue::Int(bytes(&b).len() as i64)),
        Prim::Stdout => DynValue::Fd(STDOUT),
    }
}

pub(crate) fn apply<S: MonitorState>(f: DynValue<S>, x: DynValue<S>) -> Comp<S, DynValue<S>> {
    match f.as_fun() {
        Some(f) => f.apply(x),
        None => stuck(),
    }
}

fn io_call<S>(op: IoOp, arg: &DynValue<S>) -> Option<IoCall> {
    let fd_int = || match arg.components() {
        Some((a, b)) => Some((a.as_fd()?, b.as_int()?)),
        None => None,
    };
    Some(match op {
        IoOp::Openfile => IoCall::open(String::from_utf8_lossy(arg.as_bytes()?)),
        IoOp::Read => IoCall::Read(arg.as_fd()?),
        IoOp::Write => {
            let (fd, b) = arg.components()?;
            IoCall::Write(fd.as_fd()?, b.as_bytes()?.to_vec())
        }
        IoOp::Close => IoCall::Close(arg.as_fd()?),
        IoOp::Socket => IoCall::Socket,
        IoOp::Setsockopt => IoCall::Setsockopt(arg.as_fd()?, SockOpt::ReuseAddr, true),
        IoOp::Bind => {
            let (fd, port) = fd_int()?;
            IoCall::Bind(fd, "0.0.0.0".into(), u16::try_from(port).ok()?)
        }
        IoOp::Listen => {
            let (fd, backlog) = fd_int()?;
            IoCall::Listen(fd, u32::try_from(backlog).ok()?)
        }
        IoOp::Accept => IoCall::Accept(arg.as_fd()?),
        IoOp::SetNonblock => IoCall::SetNonblock(arg.as_fd()?),
        IoOp::Select => return None,
    })
}

/// Call-by-value, left to right.
fn eval<S: MonitorState>(code: &Arc<Code>, env: Env<S>, sec: SecureIo<S>) -> Comp<S, DynValue<S>> {
    match &**code {
        Code::Var(i) => Comp::ret(lookup(&env, *i)),
        Code::Prim(p) => Comp::ret(prim_value(*p)),
        Code::Lit(Lit::Unit) => Comp::ret(DynValue::Unit),
        Code::Lit(Lit::Int(n)) => Comp::ret(DynValue::Int(*n)),
        Code::Lit(Lit::Bytes(b)) => Comp::ret(DynValue::Bytes(b.clone())),
        Code::Lam(body) => {
            let body = body.clone();
            Comp::ret(DynValue::Fun(DynFn::new(move |x| eval(&body, extend(&env, x), sec.clone()))))
        }
        Code::App(f, a) => {
            let a = a.clone();
            eval(f, env.clone(), sec.clone()).bind(move |fv| eval(&a, env, sec).bind(move |av| apply(fv, av)))
        }
        Code::Pair(a, b) => {
            let b = b.clone();
            eval(a, env.clone(), sec.clone()).bind(move |av| eval(&b, env, sec).map(move |bv| DynValue::pair(av, bv)))
        }
        Code::Fst(p) | Code::Snd(p) => {
            let first = matches!(&**code, Code::Fst(_));
            eval(p, env, sec).bind(move |v| match v {
                DynValue::Pair(a, b) => Comp::ret(if first { *a } else { *b }),
                _ => stuck(),
            })
        }
        Code::Inl(a) => eval(a, env, sec).map(DynValue::inl),
        Code::Inr(a) => eval(a, env, sec).map(DynValue::inr),
        Code::Case(s, l, r) => {
            let (l, r) = (l.clone(), r.clone());
            eval(s, env.clone(), sec.clone()).bind(move |v| match v {
                DynValue::Inl(x) => eval(&l, extend(&env, *x), sec),
                DynValue::Inr(y) => eval(&r, extend(&env, *y), sec),
                _ => stuck(),
            })
        }
        Code::Let(a, b) => {
            let b = b.clone();
            eval(a, env.clone(), sec.clone()).bind(move |v| eval(&b, extend(&env, v), sec))
        }
        Code::Io(op, a) => {
            let op = *op;
            eval(a, env, sec.clone()).bind(move |v| match io_call(op, &v) {
                Some(call) => sec.call(call).map(DynValue::from_io),
                None => stuck(),
            })
        }
    }
}

/// Splits a right-nested `n`-tuple and feeds the parts to a curried function.
fn uncurry<S: MonitorState>(f: DynValue<S>, n: usize) -> DynValue<S> {
    DynValue::Fun(DynFn::new(move |x: DynValue<S>| {
        let mut parts = Vec::with_capacity(n);
        let mut rest = x;
        for _ in 1..n {
            match rest {
                DynValue::Pair(a, b) => {
                    parts.push(*a);
                    rest = *b;
                }
                _ => return stuck(),
            }
        }
        parts.push(rest);
        parts
            .into_iter()
            .fold(Comp::ret(f.clone()), |acc, p| acc.bind(move |g| apply(g, p)))
    }))
}

/// A checked, closed context term ready to be linked.
#[derive(Debug, Clone)]
pub struct Translated {
    code: Arc<Code>,
    ty: CtxType,
    adapter: Adapter,
}

impl Translated {
    pub(crate) fn new(e: &CtxExpr, ty: CtxType, adapter: Adapter) -> Translated {
        debug_assert!(prelude().iter().all(|(x, _)| Prim::by_name(x).is_some()));
        Translated {
            code: compile(e, &mut Vec::new()),
            ty,
            adapter,
        }
    }

    /// The type the term was checked against.
    pub fn ty(&self) -> &CtxType {
        &self.ty
    }

    pub fn adapter(&self) -> Adapter {
        self.adapter
    }

    /// Runs the term with `sec` as its only source of IO.
    pub fn eval<S: MonitorState>(&self, sec: SecureIo<S>) -> Comp<S, DynValue<S>> {
        let adapter = self.adapter;
        eval(&self.code, None, sec).map(move |v| match adapter {
            Adapter::Exact => v,
            Adapter::Uncurry(n) => uncurry(v, n),
        })
    }

    /// A context of arrow type. A term that is already a value is returned
    /// as is; otherwise the function is eta-expanded and the term is run on
    /// every call.
    pub fn target_ctx<S: MonitorState>(&self) -> TargetCtx<S> {
        let t = self.clone();
        Arc::new(move |sec: SecureIo<S>| {
            let c = t.eval(sec.clone());
            match c.as_return() {
                Some(v) => v.clone(),
                None => {
                    let t = t.clone();
                    DynValue::Fun(DynFn::new(move |x| t.eval(sec.clone()).bind(move |f| apply(f, x))))
                }
            }
        })
    }

    /// A context-first context of type `A -> int`.
    pub fn dual_ctx<S: MonitorState>(&self) -> DualTargetCtx<S> {
        let t = self.clone();
        Arc::new(move |sec: SecureIo<S>, lib: DynValue<S>| {
            t.eval(sec).bind(move |f| apply(f, lib)).map(|v| v.as_int().unwrap_or(0))
        })
    }
}
