//! A small typed lambda calculus for writing untrusted contexts. Terms are
//! parsed, checked against the boundary type, and translated into host
//! values whose only IO capability is the `SecureIo` handle.
//!
//! ```text
//! e ::= \x:T. e | let x = e in e | case e of inl x => e | inr y => e
//!     | e e | fst e | snd e | inl e | inr e | io Op e
//!     | x | n | "s" | () | (e) | (e, e) | (e : T)
//! T ::= unit | int | bytes | fd | err | T * T | either T T | T -> T
//! ```

mod eval;
mod parse;
mod syntax;
mod typeck;

use thiserror::Error;

pub use eval::Translated;
pub use parse::{is_keyword, parse_expr, parse_type, ParseError};
pub use syntax::{pretty, CtxExpr, CtxType, Lit};
pub use typeck::{curried, io_signature, prelude, synthesize, typecheck, Adapter, TypeError};

use crate::contracts::TypeDesc;
use crate::linker::{DualTargetCtx, TargetCtx};
use crate::monitor::MonitorState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("type error {0}")]
    Type(#[from] TypeError),
    #[error("a context must have a function type, not {0}")]
    NotAFunction(CtxType),
}

/// Parses and checks `src` against `expected`.
pub fn compile_source(src: &str, expected: &CtxType) -> Result<Translated, DslError> {
    let e = parse_expr(src)?;
    let adapter = typecheck(&e, expected)?;
    Ok(Translated::new(&e, expected.clone(), adapter))
}

/// A program-first context of boundary type `ty`.
pub fn load_ctx<S: MonitorState>(src: &str, ty: &TypeDesc) -> Result<TargetCtx<S>, DslError> {
    let expected = CtxType::from_desc(ty);
    if !matches!(expected, CtxType::Arrow(..)) {
        return Err(DslError::NotAFunction(expected));
    }
    Ok(compile_source(src, &expected)?.target_ctx())
}

/// A context-first context receiving a library of type `ptype`.
pub fn load_dual_ctx<S: MonitorState>(src: &str, ptype: &TypeDesc) -> Result<DualTargetCtx<S>, DslError> {
    let expected = CtxType::arrow(CtxType::from_desc(ptype), CtxType::Int);
    Ok(compile_source(src, &expected)?.dual_ctx())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::DynValue;
    use crate::effect::{interpret, Caller, IoCall, World};
    use crate::monitor::{enforce_policy, stateless_mstate, Policy};

    fn ty(s: &str) -> CtxType {
        parse_type(s).unwrap()
    }

    #[test]
    fn types_print_and_parse() {
        for s in [
            "int",
            "fd -> either unit err",
            "fd * bytes * (bytes -> either unit err) -> either unit err",
            "either (either int unit) (fd * int)",
            "(int -> int) -> int",
        ] {
            let t = ty(s);
            assert_eq!(t.to_string(), s);
            assert_eq!(ty(&t.to_string()), t);
        }
    }

    #[test]
    fn parses_case_and_let() {
        let e = parse_expr("let x = 1 in case inl x of inl a => a | inr b => 0").unwrap();
        assert!(matches!(e, CtxExpr::Let(..)));
        assert_eq!(parse_expr(&pretty(&e)).unwrap(), e);
    }

    #[test]
    fn reports_positions() {
        let err = parse_expr("\\x:int.\n  x )").unwrap_err();
        assert_eq!((err.line, err.col), (2, 5));
        let err = parse_expr("io Frobnicate x").unwrap_err();
        assert!(err.msg.contains("Frobnicate"));
        assert!(parse_expr("\"abc").is_err());
    }

    #[test]
    fn rejects_ill_typed_terms() {
        for (src, t) in [
            ("fst 3", "int"),
            ("io Read \"x\"", "either bytes err"),
            ("3 4", "int"),
            ("y", "int"),
            ("\\x:int. x", "bytes -> bytes"),
            ("io Select 3", "either fd err"),
        ] {
            assert!(typecheck(&parse_expr(src).unwrap(), &ty(t)).is_err(), "{src}");
        }
    }

    #[test]
    fn error_paths_point_at_the_subterm() {
        let e = parse_expr("\\x:fd. io Write (x, 3)").unwrap();
        let err = typecheck(&e, &ty("fd -> either unit err")).unwrap_err();
        assert_eq!(err.path, ["body", "io", "snd"]);
    }

    #[test]
    fn accepts_curried_handlers() {
        let e = parse_expr("\\a:int. \\b:int. add a b").unwrap();
        assert_eq!(typecheck(&e, &ty("int * int -> int")), Ok(Adapter::Uncurry(2)));
        let e = parse_expr("\\p:int * int. add (fst p) (snd p)").unwrap();
        assert_eq!(typecheck(&e, &ty("int * int -> int")), Ok(Adapter::Exact));
    }

    #[test]
    fn io_goes_through_the_secure_handle() {
        let t = compile_source(
            "\\x:unit. case io Openfile \"/a\" of inl f => io Read f | inr e => inr e",
            &ty("unit -> either bytes err"),
        )
        .unwrap();
        let desc = stateless_mstate();
        let world = World::new().with_file("/a", b"hi");
        let open = Policy::new("open", |_: &(), _: &IoCall| true);
        let c = t.target_ctx::<()>()(enforce_policy(open));
        let run = interpret(c.as_fun().unwrap().apply(DynValue::Unit), world.clone(), &desc);
        assert_eq!(run.result, DynValue::ok(DynValue::Bytes(b"hi".to_vec())));
        assert!(run.local.events().iter().all(|e| e.caller == Caller::Ctx));
        assert_eq!(run.audit.mediated_calls, 2);

        let closed = Policy::new("closed", |_: &(), _: &IoCall| false);
        let c = t.target_ctx::<()>()(enforce_policy(closed));
        let run = interpret(c.as_fun().unwrap().apply(DynValue::Unit), world, &desc);
        assert!(run.result.as_failure().is_some_and(|e| e.is_contract_failure()));
    }

    #[test]
    fn uncurried_values_take_tuples() {
        let t = compile_source("\\a:int. \\b:int. \\c:int. add a (add b c)", &ty("int * int * int -> int")).unwrap();
        let c = t.target_ctx::<()>()(enforce_policy(Policy::new("none", |_: &(), _: &IoCall| false)));
        let arg = DynValue::pair(DynValue::Int(1), DynValue::pair(DynValue::Int(2), DynValue::Int(3)));
        let run = interpret(c.as_fun().unwrap().apply(arg), World::new(), &stateless_mstate());
        assert_eq!(run.result, DynValue::Int(6));
    }
}
