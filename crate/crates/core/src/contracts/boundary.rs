use std::sync::Arc;

use super::checks::{enforce_post, enforce_pre, refuse, EffCheckTree};
use super::value::{DynFn, DynValue, TypeDesc};
use crate::effect::{Comp, ErrCode, Mechanism, Provenance};
use crate::monitor::MonitorState;

fn shape_error(td: &TypeDesc) -> ErrCode {
    ErrCode::contract(Mechanism::Import, format!("expected {td}"))
}

/// Turns a trusted value into one that can be handed to the other side.
/// Functions get wrapped so that their arguments are imported, their
/// pre-check (if the tree has a node here) is enforced, and their results
/// are exported.
pub fn export<S: MonitorState>(td: &TypeDesc, cks: &EffCheckTree<S>, v: DynValue<S>) -> DynValue<S> {
    let (l, r) = cks.children();
    match (td, v) {
        (TypeDesc::Pair(a, b), DynValue::Pair(x, y)) => DynValue::pair(export(a, &l, *x), export(b, &r, *y)),
        (TypeDesc::Either(a, _), DynValue::Inl(x)) | (TypeDesc::Option(a), DynValue::Inl(x)) => {
            DynValue::inl(export(a, &l, *x))
        }
        (TypeDesc::Either(_, b), DynValue::Inr(y)) => DynValue::inr(export(b, &r, *y)),
        (TypeDesc::Arrow(dom, cod), DynValue::Fun(f)) => {
            let f = match cks {
                EffCheckTree::Node(eff, ..) => enforce_pre(eff, f),
                _ => f,
            };
            DynValue::Fun(export_arrow((**dom).clone(), (**cod).clone(), l, r, f))
        }
        (_, v) => v,
    }
}

fn export_arrow<S: MonitorState>(
    dom: TypeDesc,
    cod: TypeDesc,
    l: Arc<EffCheckTree<S>>,
    r: Arc<EffCheckTree<S>>,
    f: DynFn<S>,
) -> DynFn<S> {
    DynFn::new(move |x| match import(&dom, &l, x) {
        Ok(x) => {
            let cod = cod.clone();
            let r = r.clone();
            f.apply(x).map(move |y| export(&cod, &r, y))
        }
        Err(e) => match e.provenance() {
            Some(p) => refuse(p.clone()),
            None => Comp::ret(DynValue::fail(e)),
        },
    })
}

/// Checks an untrusted value against `td`. First-order parts are checked
/// immediately; functions are wrapped so that every later call exports its
/// argument, imports its result and runs the post-check found at this node.
pub fn import<S: MonitorState>(td: &TypeDesc, cks: &EffCheckTree<S>, v: DynValue<S>) -> Result<DynValue<S>, ErrCode> {
    let (l, r) = cks.children();
    match (td, v) {
        (TypeDesc::Unit, v @ DynValue::Unit)
        | (TypeDesc::Int, v @ DynValue::Int(_))
        | (TypeDesc::Bytes, v @ DynValue::Bytes(_))
        | (TypeDesc::FileDescr, v @ DynValue::Fd(_))
        | (TypeDesc::Err, v @ DynValue::Err(_)) => Ok(v),
        (TypeDesc::Pair(a, b), DynValue::Pair(x, y)) => Ok(DynValue::pair(import(a, &l, *x)?, import(b, &r, *y)?)),
        (TypeDesc::Either(a, _), DynValue::Inl(x)) | (TypeDesc::Option(a), DynValue::Inl(x)) => {
            Ok(DynValue::inl(import(a, &l, *x)?))
        }
        (TypeDesc::Either(_, b), DynValue::Inr(y)) => Ok(DynValue::inr(import(b, &r, *y)?)),
        (TypeDesc::Option(_), DynValue::Inr(y)) if matches!(*y, DynValue::Unit) => Ok(DynValue::inr(DynValue::Unit)),
        (TypeDesc::Arrow(dom, cod), DynValue::Fun(f)) => {
            let g = import_arrow((**dom).clone(), (**cod).clone(), l, r, f);
            Ok(DynValue::Fun(match cks {
                EffCheckTree::Node(eff, ..) => enforce_post(eff, g),
                _ => g,
            }))
        }
        _ => Err(shape_error(td)),
    }
}

fn import_arrow<S: MonitorState>(
    dom: TypeDesc,
    cod: TypeDesc,
    l: Arc<EffCheckTree<S>>,
    r: Arc<EffCheckTree<S>>,
    f: DynFn<S>,
) -> DynFn<S> {
    DynFn::new(move |x| {
        let cod = cod.clone();
        let r = r.clone();
        f.apply(export(&dom, &l, x)).bind(move |y| match import(&cod, &r, y) {
            Ok(y) => Comp::ret(y),
            Err(_) => refuse(Provenance::new(Mechanism::Import, format!("result of type {cod}"))),
        })
    })
}
