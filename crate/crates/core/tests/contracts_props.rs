//! Import and export at the boundary: first-order values pass through
//! unchanged, wrong shapes are refused, and function wrappers run their
//! checks at the right moment with the right attribution.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seclink::contracts::{
    export, import, make_checks_eff, Check, CheckTree, DynFn, DynValue, EffCheckTree, TypeDesc, ValidationConfig,
};
use seclink::demos::{webserver, zip, WebPolicy};
use seclink::effect::{interpret, Comp, ErrCode, History, Mechanism, ProgIo, World};
use seclink::gen::{random_value, Pools};
use seclink::monitor::full_trace_mstate;

type V = DynValue<History>;

fn first_order<R: Rng>(rng: &mut R, depth: u32) -> TypeDesc {
    if depth == 0 || rng.gen_bool(0.5) {
        return match rng.gen_range(0..5) {
            0 => TypeDesc::Unit,
            1 => TypeDesc::Int,
            2 => TypeDesc::Bytes,
            3 => TypeDesc::FileDescr,
            _ => TypeDesc::Err,
        };
    }
    match rng.gen_range(0..3) {
        0 => TypeDesc::pair(first_order(rng, depth - 1), first_order(rng, depth - 1)),
        1 => TypeDesc::either(first_order(rng, depth - 1), first_order(rng, depth - 1)),
        _ => TypeDesc::option(first_order(rng, depth - 1)),
    }
}

fn leaf() -> EffCheckTree<History> {
    EffCheckTree::Leaf
}

fn mechanism(e: &ErrCode) -> Option<Mechanism> {
    e.provenance().map(|p| p.mechanism)
}

fn world() -> World {
    World::new().with_file("/temp/a", b"alpha")
}

/// Runs `f x` and returns the result, the number of events and the
/// mechanisms that refused something.
fn call(f: &V, x: V) -> (V, usize, Vec<Mechanism>) {
    let run = interpret(f.as_fun().unwrap().apply(x), world(), &full_trace_mstate());
    let mechs = run.diagnostics.iter().map(|p| p.mechanism).collect();
    (run.result, run.local.len(), mechs)
}

/// A trusted function `int -> either int err` that reads a file first.
fn trusted() -> DynFn<History> {
    DynFn::new(|x: V| {
        ProgIo::new()
            .openfile("/temp/a", &[], 0)
            .map(move |_| DynValue::ok(DynValue::Int(x.as_int().unwrap_or(0) * 10)))
    })
}

fn int_arrow() -> TypeDesc {
    TypeDesc::io_arrow(TypeDesc::Int, TypeDesc::Int)
}

fn one_check(ck: Check<History>) -> EffCheckTree<History> {
    make_checks_eff(&CheckTree::node(ck, CheckTree::Leaf, CheckTree::Leaf))
}

proptest! {
    #[test]
    fn conforming_first_order_values_pass_unchanged(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let td = first_order(&mut rng, 3);
        let v: V = random_value(&mut rng, &td, &Pools::default());
        prop_assert!(v.conforms(&td));
        prop_assert_eq!(import(&td, &leaf(), v.clone()), Ok(v.clone()));
        prop_assert_eq!(export(&td, &leaf(), v.clone()), v);
    }

    #[test]
    fn wrong_shapes_are_refused_on_import(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let td = first_order(&mut rng, 3);
        let other = first_order(&mut rng, 3);
        let v: V = random_value(&mut rng, &other, &Pools::default());
        match import(&td, &leaf(), v.clone()) {
            Ok(w) => {
                prop_assert!(v.conforms(&td));
                prop_assert_eq!(w, v);
            }
            Err(e) => {
                prop_assert!(!v.conforms(&td));
                prop_assert_eq!(mechanism(&e), Some(Mechanism::Import));
            }
        }
    }

    #[test]
    fn pre_checks_run_before_the_call(x in -20i64..20) {
        let even = Check::new("even", |x: &V, _: &History, _: &V, _: &History| x.as_int().is_some_and(|n| n % 2 == 0));
        let f = export(&int_arrow(), &one_check(even), DynValue::Fun(trusted()));
        let (r, events, mechs) = call(&f, DynValue::Int(x));
        if x % 2 == 0 {
            prop_assert_eq!(r, DynValue::ok(DynValue::Int(x * 10)));
            prop_assert_eq!(events, 1);
            prop_assert!(mechs.is_empty());
        } else {
            prop_assert!(r.as_failure().is_some_and(|e| e.is_contract_failure()));
            prop_assert_eq!(events, 0);
            prop_assert_eq!(mechs, vec![Mechanism::PreContract]);
        }
    }

    #[test]
    fn post_checks_see_the_result_and_the_new_state(x in -20i64..20) {
        // The untrusted side reads once and answers with its argument.
        let untrusted = DynFn::new(|x: V| ProgIo::new().read(3).map(move |_| DynValue::ok(x.clone())));
        let small = Check::new("small", |_: &V, s0: &History, y: &V, s1: &History| {
            s1.len() == s0.len() + 1 && matches!(y, DynValue::Inl(v) if v.as_int().is_some_and(|n| n < 5))
        });
        let f = import(&int_arrow(), &one_check(small), DynValue::Fun(untrusted)).unwrap();
        let (r, events, mechs) = call(&f, DynValue::Int(x));
        // The call's effects happen whether or not the check accepts.
        prop_assert_eq!(events, 1);
        if x < 5 {
            prop_assert_eq!(r, DynValue::ok(DynValue::Int(x)));
            prop_assert!(mechs.is_empty());
        } else {
            prop_assert!(r.as_failure().is_some_and(|e| e.is_contract_failure()));
            prop_assert_eq!(mechs, vec![Mechanism::PostContract]);
        }
    }

    #[test]
    fn failed_gates_stop_imported_functions(x in -20i64..20) {
        let untrusted = DynFn::new(|_: V| ProgIo::new().read(3).map(|_| DynValue::ok(DynValue::Int(0))));
        let gated = Check::always("positive").with_requires(|x: &V, _: &History| x.as_int().is_some_and(|n| n > 0));
        let f = import(&int_arrow(), &one_check(gated), DynValue::Fun(untrusted)).unwrap();
        let (_, events, mechs) = call(&f, DynValue::Int(x));
        if x > 0 {
            prop_assert_eq!((events, mechs), (1, vec![]));
        } else {
            prop_assert_eq!((events, mechs), (0, vec![Mechanism::PreContract]));
        }
    }

    #[test]
    fn ill_shaped_results_are_refused(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cod = first_order(&mut rng, 2);
        let yt = first_order(&mut rng, 2);
        let y: V = random_value(&mut rng, &yt, &Pools::default());
        let td = TypeDesc::io_arrow(TypeDesc::Unit, cod.clone());
        let answer = DynValue::ok(y.clone());
        let untrusted = DynFn::new(move |_: V| Comp::ret(answer.clone()));
        let f = import(&td, &leaf(), DynValue::Fun(untrusted)).unwrap();
        let (r, _, mechs) = call(&f, DynValue::Unit);
        if y.conforms(&cod) {
            prop_assert_eq!(r, DynValue::ok(y));
        } else {
            prop_assert!(r.as_failure().is_some_and(|e| e.is_contract_failure()));
            prop_assert_eq!(mechs, vec![Mechanism::Import]);
        }
    }

    #[test]
    fn exported_functions_refuse_bad_arguments(s in "[a-z]{0,4}") {
        let f = export(&int_arrow(), &leaf(), DynValue::Fun(trusted()));
        let (r, events, mechs) = call(&f, DynValue::Bytes(s.into_bytes()));
        prop_assert!(r.as_failure().is_some_and(|e| e.is_contract_failure()));
        prop_assert_eq!(events, 0);
        prop_assert_eq!(mechs, vec![Mechanism::Import]);
    }
}

#[test]
fn trees_fit_only_their_types() {
    let t = int_arrow();
    let node = CheckTree::<History>::node(Check::always("c"), CheckTree::Leaf, CheckTree::Leaf);
    assert!(node.fits(&t));
    assert!(!node.fits(&TypeDesc::Int));
    assert!(!CheckTree::<History>::empty(CheckTree::Leaf, CheckTree::Leaf).fits(&TypeDesc::Bytes));
    assert!(CheckTree::<History>::Leaf.fits(&TypeDesc::Bytes));
    assert!(webserver::handler_checks().fits(&webserver::handler_type()));
    assert!(zip::zip_checks().fits(&zip::zip_type()));
}

#[test]
fn shipped_interfaces_validate_and_weakening_is_caught() {
    let cfg = ValidationConfig {
        samples: 1500,
        seed: 17,
        ..ValidationConfig::default()
    };
    let web = webserver::interface(WebPolicy::Standard);
    let report = web.validate(&cfg).unwrap();
    assert!(report.passed(), "{report}");
    assert!(web.bundle().weakened().obligations().is_ok());
    assert!(seclink::contracts::validate(&web.bundle().weakened(), &cfg).unwrap().counterexamples() > 0);
    let z = zip::interface().validate(&cfg).unwrap();
    assert!(z.passed(), "{z}");
}

#[test]
fn trusted_values_are_not_rechecked_on_export() {
    let v = DynValue::ok(DynValue::Fd(3));
    let td = TypeDesc::either(TypeDesc::FileDescr, TypeDesc::Err);
    assert_eq!(export(&td, &leaf(), v.clone()), v);
    assert!(matches!(
        import(&td, &leaf(), DynValue::Int(3)).unwrap_err(),
        ErrCode::ContractFailure(Some(_))
    ));
}
