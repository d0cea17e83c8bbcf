use std::fmt;
use std::sync::Arc;

use crate::effect::{quote, Comp, ErrCode, Fd, IoResult, IoValue};

/// Runtime type descriptors for values crossing the boundary.
///
/// An `Arrow` describes an effectful function; at the boundary its codomain
/// must be `Either(_, Err)` so that a contract failure always has somewhere
/// to go.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeDesc {
    Unit,
    Int,
    Bytes,
    FileDescr,
    Err,
    Pair(Box<TypeDesc>, Box<TypeDesc>),
    Either(Box<TypeDesc>, Box<TypeDesc>),
    Option(Box<TypeDesc>),
    Arrow(Box<TypeDesc>, Box<TypeDesc>),
}

impl TypeDesc {
    pub fn pair(a: TypeDesc, b: TypeDesc) -> TypeDesc {
        TypeDesc::Pair(Box::new(a), Box::new(b))
    }

    pub fn either(a: TypeDesc, b: TypeDesc) -> TypeDesc {
        TypeDesc::Either(Box::new(a), Box::new(b))
    }

    pub fn option(a: TypeDesc) -> TypeDesc {
        TypeDesc::Option(Box::new(a))
    }

    pub fn arrow(a: TypeDesc, b: TypeDesc) -> TypeDesc {
        TypeDesc::Arrow(Box::new(a), Box::new(b))
    }

    /// `a -> either b err`
    pub fn io_arrow(a: TypeDesc, b: TypeDesc) -> TypeDesc {
        TypeDesc::arrow(a, TypeDesc::either(b, TypeDesc::Err))
    }

    pub fn is_base(&self) -> bool {
        matches!(
            self,
            TypeDesc::Unit | TypeDesc::Int | TypeDesc::Bytes | TypeDesc::FileDescr | TypeDesc::Err
        )
    }

    /// Every arrow inside `self` has a codomain of the form `either _ err`.
    pub fn is_boundary_type(&self) -> bool {
        match self {
            TypeDesc::Pair(a, b) | TypeDesc::Either(a, b) => a.is_boundary_type() && b.is_boundary_type(),
            TypeDesc::Option(a) => a.is_boundary_type(),
            TypeDesc::Arrow(a, b) => {
                a.is_boundary_type()
                    && b.is_boundary_type()
                    && matches!(&**b, TypeDesc::Either(_, e) if **e == TypeDesc::Err)
            }
            _ => true,
        }
    }
}

impl fmt::Display for TypeDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeDesc::Unit => f.write_str("unit"),
            TypeDesc::Int => f.write_str("int"),
            TypeDesc::Bytes => f.write_str("bytes"),
            TypeDesc::FileDescr => f.write_str("fd"),
            TypeDesc::Err => f.write_str("err"),
            TypeDesc::Pair(a, b) => write!(f, "({a} * {b})"),
            TypeDesc::Either(a, b) => write!(f, "(either {a} {b})"),
            TypeDesc::Option(a) => write!(f, "(option {a})"),
            TypeDesc::Arrow(a, b) => write!(f, "({a} -> {b})"),
        }
    }
}

type FnBody<S> = dyn Fn(DynValue<S>) -> Comp<S, DynValue<S>> + Send + Sync;

/// A boundary closure: takes a value, returns a computation producing one.
pub struct DynFn<S>(Arc<FnBody<S>>);

impl<S> Clone for DynFn<S> {
    fn clone(&self) -> Self {
        DynFn(self.0.clone())
    }
}

impl<S: 'static> DynFn<S> {
    pub fn new(f: impl Fn(DynValue<S>) -> Comp<S, DynValue<S>> + Send + Sync + 'static) -> Self {
        DynFn(Arc::new(f))
    }

    pub fn apply(&self, x: DynValue<S>) -> Comp<S, DynValue<S>> {
        (self.0)(x)
    }

    pub fn ptr_eq(&self, other: &DynFn<S>) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// The dynamic representation of intermediate-typed values. Options are
/// encoded as `Inl v` (some) and `Inr ()` (none).
pub enum DynValue<S> {
    Unit,
    Int(i64),
    Bytes(Vec<u8>),
    Fd(Fd),
    Err(ErrCode),
    Pair(Box<DynValue<S>>, Box<DynValue<S>>),
    Inl(Box<DynValue<S>>),
    Inr(Box<DynValue<S>>),
    Fun(DynFn<S>),
}

impl<S> Clone for DynValue<S> {
    fn clone(&self) -> Self {
        match self {
            DynValue::Unit => DynValue::Unit,
            DynValue::Int(n) => DynValue::Int(*n),
            DynValue::Bytes(b) => DynValue::Bytes(b.clone()),
            DynValue::Fd(fd) => DynValue::Fd(*fd),
            DynValue::Err(e) => DynValue::Err(e.clone()),
            DynValue::Pair(a, b) => DynValue::Pair(a.clone(), b.clone()),
            DynValue::Inl(a) => DynValue::Inl(a.clone()),
            DynValue::Inr(a) => DynValue::Inr(a.clone()),
            DynValue::Fun(f) => DynValue::Fun(f.clone()),
        }
    }
}

/// Structural equality; closures are equal only when they are the same
/// allocation.
impl<S> PartialEq for DynValue<S> {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (DynValue::Unit, DynValue::Unit) => true,
            (DynValue::Int(a), DynValue::Int(b)) => a == b,
            (DynValue::Bytes(a), DynValue::Bytes(b)) => a == b,
            (DynValue::Fd(a), DynValue::Fd(b)) => a == b,
            (DynValue::Err(a), DynValue::Err(b)) => a == b,
            (DynValue::Pair(a1, b1), DynValue::Pair(a2, b2)) => a1 == a2 && b1 == b2,
            (DynValue::Inl(a), DynValue::Inl(b)) | (DynValue::Inr(a), DynValue::Inr(b)) => a == b,
            (DynValue::Fun(f), DynValue::Fun(g)) => Arc::ptr_eq(&f.0, &g.0),
            _ => false,
        }
    }
}

impl<S> fmt::Debug for DynValue<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<S> fmt::Display for DynValue<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynValue::Unit => f.write_str("()"),
            DynValue::Int(n) => write!(f, "{n}"),
            DynValue::Bytes(b) => f.write_str(&quote(b)),
            DynValue::Fd(fd) => write!(f, "fd{fd}"),
            DynValue::Err(e) => write!(f, "{e}"),
            DynValue::Pair(a, b) => write!(f, "({a}, {b})"),
            DynValue::Inl(a) => write!(f, "Inl {a}"),
            DynValue::Inr(a) => write!(f, "Inr {a}"),
            DynValue::Fun(_) => f.write_str("<fun>"),
        }
    }
}

impl<S> DynValue<S> {
    pub fn pair(a: DynValue<S>, b: DynValue<S>) -> Self {
        DynValue::Pair(Box::new(a), Box::new(b))
    }

    pub fn inl(a: DynValue<S>) -> Self {
        DynValue::Inl(Box::new(a))
    }

    pub fn inr(a: DynValue<S>) -> Self {
        DynValue::Inr(Box::new(a))
    }

    /// `Inl v`
    pub fn ok(v: DynValue<S>) -> Self {
        DynValue::inl(v)
    }

    /// `Inr e`
    pub fn fail(e: ErrCode) -> Self {
        DynValue::inr(DynValue::Err(e))
    }

    pub fn from_io(r: IoResult) -> Self {
        match r {
            Ok(IoValue::Unit) => DynValue::ok(DynValue::Unit),
            Ok(IoValue::Fd(fd)) => DynValue::ok(DynValue::Fd(fd)),
            Ok(IoValue::Bytes(b)) => DynValue::ok(DynValue::Bytes(b)),
            Err(e) => DynValue::fail(e),
        }
    }

    pub fn is_inr(&self) -> bool {
        matches!(self, DynValue::Inr(_))
    }

    pub fn is_inl(&self) -> bool {
        matches!(self, DynValue::Inl(_))
    }

    /// The error carried by `Inr (Err e)`.
    pub fn as_failure(&self) -> Option<&ErrCode> {
        match self {
            DynValue::Inr(inner) => match &**inner {
                DynValue::Err(e) => Some(e),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn as_fd(&self) -> Option<Fd> {
        match self {
            DynValue::Fd(fd) => Some(*fd),
            _ => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            DynValue::Bytes(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            DynValue::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_fun(&self) -> Option<&DynFn<S>> {
        match self {
            DynValue::Fun(f) => Some(f),
            _ => None,
        }
    }

    pub fn components(&self) -> Option<(&DynValue<S>, &DynValue<S>)> {
        match self {
            DynValue::Pair(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// First-order shape check; arrows only require a closure.
    pub fn conforms(&self, td: &TypeDesc) -> bool {
        match (td, self) {
            (TypeDesc::Unit, DynValue::Unit)
            | (TypeDesc::Int, DynValue::Int(_))
            | (TypeDesc::Bytes, DynValue::Bytes(_))
            | (TypeDesc::FileDescr, DynValue::Fd(_))
            | (TypeDesc::Err, DynValue::Err(_))
            | (TypeDesc::Arrow(..), DynValue::Fun(_)) => true,
            (TypeDesc::Pair(a, b), DynValue::Pair(x, y)) => x.conforms(a) && y.conforms(b),
            (TypeDesc::Either(a, _), DynValue::Inl(x)) | (TypeDesc::Option(a), DynValue::Inl(x)) => x.conforms(a),
            (TypeDesc::Either(_, b), DynValue::Inr(y)) => y.conforms(b),
            (TypeDesc::Option(_), DynValue::Inr(y)) => matches!(**y, DynValue::Unit),
            _ => false,
        }
    }
}
