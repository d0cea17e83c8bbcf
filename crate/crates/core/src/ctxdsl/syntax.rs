use std::fmt;

use crate::contracts::TypeDesc;
use crate::effect::IoOp;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CtxType {
    Unit,
    Int,
    Bytes,
    FileDescr,
    Err,
    Pair(Box<CtxType>, Box<CtxType>),
    Either(Box<CtxType>, Box<CtxType>),
    Arrow(Box<CtxType>, Box<CtxType>),
}

impl CtxType {
    pub fn pair(a: CtxType, b: CtxType) -> CtxType {
        CtxType::Pair(Box::new(a), Box::new(b))
    }

    pub fn either(a: CtxType, b: CtxType) -> CtxType {
        CtxType::Either(Box::new(a), Box::new(b))
    }

    pub fn arrow(a: CtxType, b: CtxType) -> CtxType {
        CtxType::Arrow(Box::new(a), Box::new(b))
    }

    /// `either t err`
    pub fn result(t: CtxType) -> CtxType {
        CtxType::either(t, CtxType::Err)
    }

    /// Options become `either t unit`.
    pub fn from_desc(td: &TypeDesc) -> CtxType {
        match td {
            TypeDesc::Unit => CtxType::Unit,
            TypeDesc::Int => CtxType::Int,
            TypeDesc::Bytes => CtxType::Bytes,
            TypeDesc::FileDescr => CtxType::FileDescr,
            TypeDesc::Err => CtxType::Err,
            TypeDesc::Pair(a, b) => CtxType::pair(CtxType::from_desc(a), CtxType::from_desc(b)),
            TypeDesc::Either(a, b) => CtxType::either(CtxType::from_desc(a), CtxType::from_desc(b)),
            TypeDesc::Option(a) => CtxType::either(CtxType::from_desc(a), CtxType::Unit),
            TypeDesc::Arrow(a, b) => CtxType::arrow(CtxType::from_desc(a), CtxType::from_desc(b)),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // 0: arrow, 1: pair component, 2: `either` form, 3: atom only
        match self {
            CtxType::Unit => f.write_str("unit"),
            CtxType::Int => f.write_str("int"),
            CtxType::Bytes => f.write_str("bytes"),
            CtxType::FileDescr => f.write_str("fd"),
            CtxType::Err => f.write_str("err"),
            CtxType::Either(a, b) if prec <= 2 => {
                f.write_str("either ")?;
                a.fmt_prec(f, 3)?;
                f.write_str(" ")?;
                b.fmt_prec(f, 3)
            }
            CtxType::Pair(a, b) if prec <= 1 => {
                a.fmt_prec(f, 2)?;
                f.write_str(" * ")?;
                b.fmt_prec(f, 1)
            }
            CtxType::Arrow(a, b) if prec == 0 => {
                a.fmt_prec(f, 1)?;
                f.write_str(" -> ")?;
                b.fmt_prec(f, 0)
            }
            _ => {
                f.write_str("(")?;
                self.fmt_prec(f, 0)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for CtxType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Lit {
    Unit,
    Int(i64),
    Bytes(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CtxExpr {
    Var(String),
    Lit(Lit),
    Lam(String, CtxType, Box<CtxExpr>),
    App(Box<CtxExpr>, Box<CtxExpr>),
    Pair(Box<CtxExpr>, Box<CtxExpr>),
    Fst(Box<CtxExpr>),
    Snd(Box<CtxExpr>),
    Inl(Box<CtxExpr>),
    Inr(Box<CtxExpr>),
    /// `case e of inl x => l | inr y => r`
    Case(Box<CtxExpr>, String, Box<CtxExpr>, String, Box<CtxExpr>),
    Let(String, Box<CtxExpr>, Box<CtxExpr>),
    /// `(e : t)`
    Ann(Box<CtxExpr>, CtxType),
    Io(IoOp, Box<CtxExpr>),
}

impl CtxExpr {
    pub fn var(x: &str) -> CtxExpr {
        CtxExpr::Var(x.to_string())
    }

    pub fn lam(x: &str, t: CtxType, body: CtxExpr) -> CtxExpr {
        CtxExpr::Lam(x.to_string(), t, Box::new(body))
    }

    pub fn app(f: CtxExpr, a: CtxExpr) -> CtxExpr {
        CtxExpr::App(Box::new(f), Box::new(a))
    }

    pub fn io(op: IoOp, arg: CtxExpr) -> CtxExpr {
        CtxExpr::Io(op, Box::new(arg))
    }

    /// Number of nodes; used to bound generated terms.
    pub fn size(&self) -> usize {
        1 + match self {
            CtxExpr::Var(_) | CtxExpr::Lit(_) => 0,
            CtxExpr::Lam(_, _, e)
            | CtxExpr::Fst(e)
            | CtxExpr::Snd(e)
            | CtxExpr::Inl(e)
            | CtxExpr::Inr(e)
            | CtxExpr::Ann(e, _)
            | CtxExpr::Io(_, e) => e.size(),
            CtxExpr::App(a, b) | CtxExpr::Pair(a, b) | CtxExpr::Let(_, a, b) => a.size() + b.size(),
            CtxExpr::Case(s, _, l, _, r) => s.size() + l.size() + r.size(),
        }
    }

    fn is_atom(&self) -> bool {
        matches!(self, CtxExpr::Var(_) | CtxExpr::Lit(_) | CtxExpr::Pair(..) | CtxExpr::Ann(..))
    }

    fn is_app_level(&self) -> bool {
        self.is_atom()
            || matches!(
                self,
                CtxExpr::App(..) | CtxExpr::Fst(_) | CtxExpr::Snd(_) | CtxExpr::Inl(_) | CtxExpr::Inr(_) | CtxExpr::Io(..)
            )
    }
}

pub(crate) fn escape_bytes(bytes: &[u8]) -> String {
    let mut s = String::from("\"");
    for &b in bytes {
        match b {
            b'"' => s.push_str("\\\""),
            b'\\' => s.push_str("\\\\"),
            b'\n' => s.push_str("\\n"),
            b'\r' => s.push_str("\\r"),
            b'\t' => s.push_str("\\t"),
            0x20..=0x7e => s.push(b as char),
            _ => s.push_str(&format!("\\x{b:02x}")),
        }
    }
    s.push('"');
    s
}

fn write_atom(f: &mut fmt::Formatter<'_>, e: &CtxExpr) -> fmt::Result {
    if e.is_atom() {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

impl fmt::Display for CtxExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CtxExpr::Var(x) => f.write_str(x),
            CtxExpr::Lit(Lit::Unit) => f.write_str("()"),
            CtxExpr::Lit(Lit::Int(n)) => write!(f, "{n}"),
            CtxExpr::Lit(Lit::Bytes(b)) => f.write_str(&escape_bytes(b)),
            CtxExpr::Lam(x, t, body) => write!(f, "\\{x}:{}. {body}", Paren(t)),
            CtxExpr::App(g, a) => {
                if g.is_app_level() {
                    write!(f, "{g}")?;
                } else {
                    write!(f, "({g})")?;
                }
                f.write_str(" ")?;
                write_atom(f, a)
            }
            CtxExpr::Pair(a, b) => write!(f, "({a}, {b})"),
            CtxExpr::Fst(e) => {
                f.write_str("fst ")?;
                write_atom(f, e)
            }
            CtxExpr::Snd(e) => {
                f.write_str("snd ")?;
                write_atom(f, e)
            }
            CtxExpr::Inl(e) => {
                f.write_str("inl ")?;
                write_atom(f, e)
            }
            CtxExpr::Inr(e) => {
                f.write_str("inr ")?;
                write_atom(f, e)
            }
            CtxExpr::Case(s, x, l, y, r) => {
                write!(f, "case {s} of inl {x} => ")?;
                if l.is_app_level() {
                    write!(f, "{l}")?;
                } else {
                    write!(f, "({l})")?;
                }
                write!(f, " | inr {y} => {r}")
            }
            CtxExpr::Let(x, a, b) => write!(f, "let {x} = {a} in {b}"),
            CtxExpr::Ann(e, t) => write!(f, "({e} : {t})"),
            CtxExpr::Io(op, e) => {
                write!(f, "io {} ", op.name())?;
                write_atom(f, e)
            }
        }
    }
}

/// Lambda annotations other than base types are parenthesized so the `.`
/// is never ambiguous to a reader.
struct Paren<'a>(&'a CtxType);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            CtxType::Unit | CtxType::Int | CtxType::Bytes | CtxType::FileDescr | CtxType::Err => write!(f, "{}", self.0),
            t => write!(f, "({t})"),
        }
    }
}

pub fn pretty(e: &CtxExpr) -> String {
    e.to_string()
}
