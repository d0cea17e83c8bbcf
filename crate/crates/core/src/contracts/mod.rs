//! Higher-order contracts at the program/context boundary: runtime type
//! descriptors, dynamic values, check trees with their effectful form, the
//! import/export wrappers, and the randomized validation of the constraints
//! that make the checks sound.

mod boundary;
mod checks;
mod constraints;
mod value;

use thiserror::Error;

pub use boundary::{export, import};
pub use checks::{
    enforce_post, enforce_pre, make_check_eff, make_checks_eff, Check, CheckTree, EffCheck, EffCheckTree, Ghost,
    PendingCheck, Setup,
};
pub use constraints::{
    validate, ArrowSpec, Constraint, ConstraintReport, ConstraintResult, ContractBundle, Obligation, Polarity,
    ValidationConfig,
};
pub use value::{DynFn, DynValue, TypeDesc};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContractError {
    #[error("check tree does not fit type {0}")]
    ShapeMismatch(String),
    #[error("no specification for check `{0}`")]
    MissingSpec(String),
    #[error("type {0} has an arrow whose codomain cannot carry errors")]
    NotBoundaryType(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect::{interpret, Comp, ErrCode, Mechanism, World};
    use crate::monitor::stateless_mstate;

    type V = DynValue<()>;

    fn leaf() -> EffCheckTree<()> {
        EffCheckTree::Leaf
    }

    #[test]
    fn base_values_round_trip() {
        let td = TypeDesc::pair(TypeDesc::Int, TypeDesc::either(TypeDesc::Bytes, TypeDesc::Err));
        let v: V = DynValue::pair(DynValue::Int(42), DynValue::inl(DynValue::Bytes(b"x".to_vec())));
        let out = import(&td, &leaf(), export(&td, &leaf(), v.clone())).unwrap();
        assert_eq!(out, v);
        assert_eq!(export(&TypeDesc::Int, &leaf(), V::Int(42)), V::Int(42));
        assert_eq!(import(&TypeDesc::Int, &leaf(), V::Int(7)), Ok(V::Int(7)));
    }

    #[test]
    fn import_rejects_shape_mismatch() {
        let r = import(&TypeDesc::FileDescr, &leaf(), V::Bytes(b"3".to_vec()));
        assert!(matches!(r, Err(ErrCode::ContractFailure(Some(ref p))) if p.mechanism == Mechanism::Import));
        let opt = TypeDesc::option(TypeDesc::Int);
        assert!(import(&opt, &leaf(), V::inr(V::Int(1))).is_err());
        assert!(import(&opt, &leaf(), V::inr(V::Unit)).is_ok());
    }

    #[test]
    fn exported_function_rejects_ill_typed_argument() {
        let td = TypeDesc::io_arrow(TypeDesc::Int, TypeDesc::Int);
        let f: V = DynValue::Fun(DynFn::new(|x| Comp::ret(DynValue::ok(x))));
        let g = export(&td, &leaf(), f);
        let c = g.as_fun().unwrap().apply(V::Bytes(b"no".to_vec()));
        let run = interpret(c, World::new(), &stateless_mstate());
        assert!(run.result.as_failure().is_some_and(ErrCode::is_contract_failure));
        let c = g.as_fun().unwrap().apply(V::Int(3));
        assert_eq!(interpret(c, World::new(), &stateless_mstate()).result, V::ok(V::Int(3)));
    }

    #[test]
    fn imported_function_with_bad_result_fails() {
        let td = TypeDesc::io_arrow(TypeDesc::Unit, TypeDesc::Int);
        let f: V = DynValue::Fun(DynFn::new(|_| Comp::ret(DynValue::ok(DynValue::Bytes(vec![])))));
        let g = import(&td, &leaf(), f).unwrap();
        let run = interpret(g.as_fun().unwrap().apply(V::Unit), World::new(), &stateless_mstate());
        assert!(run.result.as_failure().is_some());
        assert_eq!(run.diagnostics[0].mechanism, Mechanism::Import);
    }

    #[test]
    fn pre_and_post_checks() {
        let td = TypeDesc::io_arrow(TypeDesc::Int, TypeDesc::Int);
        let pos = Check::<()>::new("positive", |x, _, _, _| x.as_int().is_some_and(|n| n > 0));
        let tree = make_checks_eff(&CheckTree::node(pos, CheckTree::Leaf, CheckTree::Leaf));
        let id: V = DynValue::Fun(DynFn::new(|x| Comp::ret(DynValue::ok(x))));

        let exported = export(&td, &tree, id.clone());
        let run = interpret(exported.as_fun().unwrap().apply(V::Int(-1)), World::new(), &stateless_mstate());
        assert_eq!(run.diagnostics[0].mechanism, Mechanism::PreContract);

        let imported = import(&td, &tree, id).unwrap();
        let run = interpret(imported.as_fun().unwrap().apply(V::Int(-1)), World::new(), &stateless_mstate());
        assert_eq!(run.diagnostics[0].mechanism, Mechanism::PostContract);
        let run = interpret(imported.as_fun().unwrap().apply(V::Int(5)), World::new(), &stateless_mstate());
        assert_eq!(run.result, V::ok(V::Int(5)));
        assert!(run.diagnostics.is_empty());
    }

    #[test]
    fn tree_fitting() {
        let td = TypeDesc::io_arrow(TypeDesc::pair(TypeDesc::Int, TypeDesc::Int), TypeDesc::Unit);
        let ck = Check::<()>::always("c");
        assert!(CheckTree::<()>::Leaf.fits(&td));
        assert!(CheckTree::node(ck.clone(), CheckTree::empty(CheckTree::Leaf, CheckTree::Leaf), CheckTree::Leaf).fits(&td));
        assert!(!CheckTree::node(ck.clone(), CheckTree::node(ck, CheckTree::Leaf, CheckTree::Leaf), CheckTree::Leaf).fits(&td));
        assert!(!CheckTree::<()>::empty(CheckTree::Leaf, CheckTree::Leaf).fits(&TypeDesc::Int));
    }

    #[test]
    fn boundary_types_need_error_codomains() {
        assert!(TypeDesc::io_arrow(TypeDesc::Int, TypeDesc::Int).is_boundary_type());
        assert!(!TypeDesc::arrow(TypeDesc::Int, TypeDesc::Int).is_boundary_type());
    }
}
