use thiserror::Error;

use super::syntax::{CtxExpr, CtxType, Lit};
use crate::effect::IoOp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at {}: {msg}", if path.is_empty() { "<root>".to_string() } else { path.join("/") })]
pub struct TypeError {
    /// Steps from the root to the offending subterm.
    pub path: Vec<String>,
    pub msg: String,
}

/// Host functions every context can use.
pub fn prelude() -> Vec<(&'static str, CtxType)> {
    use CtxType::*;
    vec![
        ("concat", CtxType::arrow(Bytes, CtxType::arrow(Bytes, Bytes))),
        ("request_path", CtxType::arrow(Bytes, Bytes)),
        ("http_response", CtxType::arrow(Int, CtxType::arrow(Bytes, Bytes))),
        ("add", CtxType::arrow(Int, CtxType::arrow(Int, Int))),
        ("len", CtxType::arrow(Bytes, Int)),
        ("stdout", FileDescr),
    ]
}

/// Argument and success type of an operation; `Select` needs a list and is
/// not expressible.
pub fn io_signature(op: IoOp) -> Option<(CtxType, CtxType)> {
    use CtxType::*;
    Some(match op {
        IoOp::Openfile => (Bytes, FileDescr),
        IoOp::Read => (FileDescr, Bytes),
        IoOp::Write => (CtxType::pair(FileDescr, Bytes), Unit),
        IoOp::Close | IoOp::SetNonblock | IoOp::Setsockopt => (FileDescr, Unit),
        IoOp::Socket => (Unit, FileDescr),
        IoOp::Accept => (FileDescr, FileDescr),
        IoOp::Listen | IoOp::Bind => (CtxType::pair(FileDescr, Int), Unit),
        IoOp::Select => return None,
    })
}

/// How a checked term relates to the type it was asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adapter {
    Exact,
    /// The term is the curried form of a function over an `n`-component
    /// right-nested tuple.
    Uncurry(usize),
}

struct Checker {
    scope: Vec<(String, CtxType)>,
    path: Vec<String>,
}

type TcResult<T> = Result<T, TypeError>;

impl Checker {
    fn fail<T>(&self, msg: impl Into<String>) -> TcResult<T> {
        Err(TypeError {
            path: self.path.clone(),
            msg: msg.into(),
        })
    }

    fn at<T>(&mut self, step: &str, f: impl FnOnce(&mut Self) -> TcResult<T>) -> TcResult<T> {
        self.path.push(step.to_string());
        let r = f(self);
        self.path.pop();
        r
    }

    fn bound<T>(&mut self, x: &str, t: CtxType, f: impl FnOnce(&mut Self) -> TcResult<T>) -> TcResult<T> {
        self.scope.push((x.to_string(), t));
        let r = f(self);
        self.scope.pop();
        r
    }

    fn lookup(&self, x: &str) -> Option<CtxType> {
        self.scope
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, t)| t.clone())
            .or_else(|| prelude().into_iter().find(|(y, _)| *y == x).map(|(_, t)| t))
    }

    fn sum_parts(&self, t: CtxType) -> TcResult<(CtxType, CtxType)> {
        match t {
            CtxType::Either(a, b) => Ok((*a, *b)),
            t => self.fail(format!("case scrutinee has type {t}, not an either")),
        }
    }

    fn synth(&mut self, e: &CtxExpr) -> TcResult<CtxType> {
        match e {
            CtxExpr::Var(x) => match self.lookup(x) {
                Some(t) => Ok(t),
                None => self.fail(format!("unbound variable `{x}`")),
            },
            CtxExpr::Lit(Lit::Unit) => Ok(CtxType::Unit),
            CtxExpr::Lit(Lit::Int(_)) => Ok(CtxType::Int),
            CtxExpr::Lit(Lit::Bytes(_)) => Ok(CtxType::Bytes),
            CtxExpr::Lam(x, t, body) => {
                let cod = self.at("body", |c| c.bound(x, t.clone(), |c| c.synth(body)))?;
                Ok(CtxType::arrow(t.clone(), cod))
            }
            CtxExpr::App(f, a) => match self.at("fun", |c| c.synth(f))? {
                CtxType::Arrow(dom, cod) => {
                    self.at("arg", |c| c.check(a, &dom))?;
                    Ok(*cod)
                }
                t => self.fail(format!("applying a value of type {t}, which is not a function")),
            },
            CtxExpr::Pair(a, b) => {
                let ta = self.at("fst", |c| c.synth(a))?;
                let tb = self.at("snd", |c| c.synth(b))?;
                Ok(CtxType::pair(ta, tb))
            }
            CtxExpr::Fst(p) | CtxExpr::Snd(p) => {
                let first = matches!(e, CtxExpr::Fst(_));
                match self.at("pair", |c| c.synth(p))? {
                    CtxType::Pair(a, b) => Ok(if first { *a } else { *b }),
                    t => self.fail(format!("projecting from a value of type {t}, which is not a pair")),
                }
            }
            CtxExpr::Inl(_) | CtxExpr::Inr(_) => {
                self.fail("cannot infer the type of an injection here; annotate it with `(e : either A B)`")
            }
            CtxExpr::Case(s, x, l, y, r) => {
                let (a, b) = self.at("scrut", |c| c.synth(s)).and_then(|t| self.sum_parts(t))?;
                match self.at("inl", |c| c.bound(x, a.clone(), |c| c.synth(l))) {
                    Ok(t) => {
                        self.at("inr", |c| c.bound(y, b, |c| c.check(r, &t)))?;
                        Ok(t)
                    }
                    Err(first) => {
                        let t = self.at("inr", |c| c.bound(y, b, |c| c.synth(r))).map_err(|_| first)?;
                        self.at("inl", |c| c.bound(x, a, |c| c.check(l, &t)))?;
                        Ok(t)
                    }
                }
            }
            CtxExpr::Let(x, a, b) => {
                let ta = self.at("bound", |c| c.synth(a))?;
                self.at("body", |c| c.bound(x, ta, |c| c.synth(b)))
            }
            CtxExpr::Ann(inner, t) => {
                self.at("ann", |c| c.check(inner, t))?;
                Ok(t.clone())
            }
            CtxExpr::Io(op, arg) => match io_signature(*op) {
                Some((dom, ok)) => {
                    self.at("io", |c| c.check(arg, &dom))?;
                    Ok(CtxType::result(ok))
                }
                None => self.fail(format!("`{op}` is not available to contexts")),
            },
        }
    }

    fn check(&mut self, e: &CtxExpr, t: &CtxType) -> TcResult<()> {
        match (e, t) {
            (CtxExpr::Lam(x, ann, body), CtxType::Arrow(dom, cod)) => {
                if ann != &**dom {
                    return self.fail(format!("parameter `{x}` is annotated {ann} but {dom} is expected"));
                }
                self.at("body", |c| c.bound(x, ann.clone(), |c| c.check(body, cod)))
            }
            (CtxExpr::Pair(a, b), CtxType::Pair(ta, tb)) => {
                self.at("fst", |c| c.check(a, ta))?;
                self.at("snd", |c| c.check(b, tb))
            }
            (CtxExpr::Inl(a), CtxType::Either(ta, _)) => self.at("inl", |c| c.check(a, ta)),
            (CtxExpr::Inr(b), CtxType::Either(_, tb)) => self.at("inr", |c| c.check(b, tb)),
            (CtxExpr::Inl(_) | CtxExpr::Inr(_), t) => self.fail(format!("an injection cannot have type {t}")),
            (CtxExpr::Case(s, x, l, y, r), t) => {
                let (a, b) = self.at("scrut", |c| c.synth(s)).and_then(|ty| self.sum_parts(ty))?;
                self.at("inl", |c| c.bound(x, a, |c| c.check(l, t)))?;
                self.at("inr", |c| c.bound(y, b, |c| c.check(r, t)))
            }
            (CtxExpr::Let(x, a, b), t) => {
                let ta = self.at("bound", |c| c.synth(a))?;
                self.at("body", |c| c.bound(x, ta, |c| c.check(b, t)))
            }
            _ => {
                let found = self.synth(e)?;
                if &found == t {
                    Ok(())
                } else {
                    self.fail(format!("expected {t}, found {found}"))
                }
            }
        }
    }
}

/// `a1 * (a2 * ... an)` split into its components.
fn tuple_components(t: &CtxType) -> Vec<CtxType> {
    match t {
        CtxType::Pair(a, b) => {
            let mut v = vec![(**a).clone()];
            v.extend(tuple_components(b));
            v
        }
        t => vec![t.clone()],
    }
}

/// `a1 -> a2 -> ... -> cod` for an arrow over a tuple, if it has one.
pub fn curried(t: &CtxType) -> Option<(CtxType, usize)> {
    match t {
        CtxType::Arrow(dom, cod) if matches!(**dom, CtxType::Pair(..)) => {
            let parts = tuple_components(dom);
            let n = parts.len();
            let ty = parts.into_iter().rev().fold((**cod).clone(), |acc, a| CtxType::arrow(a, acc));
            Some((ty, n))
        }
        _ => None,
    }
}

/// Infers the type of a closed term.
pub fn synthesize(e: &CtxExpr) -> Result<CtxType, TypeError> {
    Checker {
        scope: Vec::new(),
        path: Vec::new(),
    }
    .synth(e)
}

/// Checks a closed term against `expected`, accepting the curried form of a
/// function over a tuple.
pub fn typecheck(e: &CtxExpr, expected: &CtxType) -> Result<Adapter, TypeError> {
    let mut c = Checker {
        scope: Vec::new(),
        path: Vec::new(),
    };
    match c.check(e, expected) {
        Ok(()) => Ok(Adapter::Exact),
        Err(err) => match curried(expected) {
            Some((alt, n)) => {
                c.path.clear();
                // Report against whichever form the term was written in.
                let wrote_curried = matches!(e, CtxExpr::Lam(_, t, _) if !matches!(t, CtxType::Pair(..)));
                c.check(e, &alt)
                    .map(|_| Adapter::Uncurry(n))
                    .map_err(|alt_err| if wrote_curried { alt_err } else { err })
            }
            None => Err(err),
        },
    }
}
