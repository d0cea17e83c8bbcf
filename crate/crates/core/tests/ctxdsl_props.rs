//! Properties of the context language: printing round-trips through the
//! parser, generated well-typed terms check, a single ill-typed subterm
//! anywhere makes the whole term fail, and evaluation of well-typed terms
//! produces values of the expected shape.

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seclink::contracts::{DynValue, TypeDesc};
use seclink::ctxdsl::{
    compile_source, is_keyword, parse_expr, pretty, typecheck, Adapter, CtxExpr, CtxType, Lit,
};
use seclink::effect::{interpret, ErrCode, IoCall, IoOp, World};
use seclink::monitor::{enforce_policy, stateless_mstate, Policy};

struct Gen {
    rng: ChaCha8Rng,
    fresh: usize,
}

const FREE: [(&str, CtxType); 4] = [
    ("n", CtxType::Int),
    ("b", CtxType::Bytes),
    ("f", CtxType::FileDescr),
    ("e", CtxType::Err),
];

impl Gen {
    fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            fresh: 0,
        }
    }

    fn name(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn base(&mut self) -> CtxType {
        [CtxType::Unit, CtxType::Int, CtxType::Bytes, CtxType::FileDescr, CtxType::Err]
            .choose(&mut self.rng)
            .unwrap()
            .clone()
    }

    fn ty(&mut self, depth: u32) -> CtxType {
        if depth == 0 || self.rng.gen_bool(0.6) {
            return self.base();
        }
        match self.rng.gen_range(0..3) {
            0 => CtxType::pair(self.ty(depth - 1), self.ty(depth - 1)),
            1 => CtxType::either(self.ty(depth - 1), self.ty(depth - 1)),
            _ => CtxType::arrow(self.ty(depth - 1), self.ty(depth - 1)),
        }
    }

    fn bytes(&mut self) -> Vec<u8> {
        let n = self.rng.gen_range(0..6);
        (0..n)
            .map(|_| *[b'a', b'/', b'"', b'\\', b'\n', 0x00, 0xff, b' '].choose(&mut self.rng).unwrap())
            .collect()
    }

    /// A term of type `t` in scope `env`. Subterms in synthesis positions
    /// are annotated.
    fn term(&mut self, t: &CtxType, env: &mut Vec<(String, CtxType)>, depth: u32) -> CtxExpr {
        let vars: Vec<String> = env.iter().filter(|(_, u)| u == t).map(|(x, _)| x.clone()).collect();
        if depth == 0 || self.rng.gen_bool(0.25) {
            if let Some(x) = vars.choose(&mut self.rng) {
                return CtxExpr::Var(x.clone());
            }
        }
        if depth == 0 {
            return self.intro(t, env, 0);
        }
        match self.rng.gen_range(0..7) {
            0 => {
                let a = self.ty(1);
                let f = self.term(&CtxType::arrow(a.clone(), t.clone()), env, depth - 1);
                let x = self.term(&a, env, depth - 1);
                CtxExpr::App(Box::new(ann(f, CtxType::arrow(a, t.clone()))), Box::new(x))
            }
            1 => {
                let b = self.ty(1);
                let pt = CtxType::pair(t.clone(), b.clone());
                let p = self.term(&pt, env, depth - 1);
                if self.rng.gen() {
                    CtxExpr::Fst(Box::new(ann(p, pt)))
                } else {
                    let pt = CtxType::pair(b, t.clone());
                    let p = self.term(&pt, env, depth - 1);
                    CtxExpr::Snd(Box::new(ann(p, pt)))
                }
            }
            2 => {
                let (a, b) = (self.ty(1), self.ty(1));
                let st = CtxType::either(a.clone(), b.clone());
                let s = self.term(&st, env, depth - 1);
                let (x, y) = (self.name(), self.name());
                env.push((x.clone(), a));
                let l = self.term(t, env, depth - 1);
                env.pop();
                env.push((y.clone(), b));
                let r = self.term(t, env, depth - 1);
                env.pop();
                CtxExpr::Case(Box::new(ann(s, st)), x, Box::new(l), y, Box::new(r))
            }
            3 => {
                let a = self.ty(1);
                let bound = self.term(&a, env, depth - 1);
                let x = self.name();
                env.push((x.clone(), a.clone()));
                let body = self.term(t, env, depth - 1);
                env.pop();
                CtxExpr::Let(x, Box::new(ann(bound, a)), Box::new(body))
            }
            4 => self.io_or_prim(t, env, depth).unwrap_or_else(|| self.intro(t, env, depth)),
            _ => self.intro(t, env, depth),
        }
    }

    fn io_or_prim(&mut self, t: &CtxType, env: &mut Vec<(String, CtxType)>, depth: u32) -> Option<CtxExpr> {
        let ops: Vec<IoOp> = IoOp::ALL
            .into_iter()
            .filter(|op| seclink::ctxdsl::io_signature(*op).is_some_and(|(_, ok)| &CtxType::result(ok) == t))
            .collect();
        if let Some(op) = ops.choose(&mut self.rng) {
            let (dom, _) = seclink::ctxdsl::io_signature(*op).unwrap();
            return Some(CtxExpr::io(*op, self.term(&dom, env, depth - 1)));
        }
        let two = |g: &mut Gen, env: &mut Vec<(String, CtxType)>, f: &str, a: CtxType, b: CtxType| {
            let x = g.term(&a, env, depth - 1);
            let y = g.term(&b, env, depth - 1);
            CtxExpr::app(CtxExpr::app(CtxExpr::var(f), x), y)
        };
        Some(match t {
            CtxType::Bytes if self.rng.gen() => two(self, env, "concat", CtxType::Bytes, CtxType::Bytes),
            CtxType::Bytes => two(self, env, "http_response", CtxType::Int, CtxType::Bytes),
            CtxType::Int if self.rng.gen() => two(self, env, "add", CtxType::Int, CtxType::Int),
            CtxType::Int => CtxExpr::app(CtxExpr::var("len"), self.term(&CtxType::Bytes, env, depth - 1)),
            _ => return None,
        })
    }

    fn intro(&mut self, t: &CtxType, env: &mut Vec<(String, CtxType)>, depth: u32) -> CtxExpr {
        let d = depth.saturating_sub(1);
        match t {
            CtxType::Unit => CtxExpr::Lit(Lit::Unit),
            CtxType::Int => CtxExpr::Lit(Lit::Int(*[0, 1, -7, 42, i64::MIN, i64::MAX].choose(&mut self.rng).unwrap())),
            CtxType::Bytes => CtxExpr::Lit(Lit::Bytes(self.bytes())),
            CtxType::FileDescr => CtxExpr::var(if self.rng.gen() { "stdout" } else { "f" }),
            CtxType::Err => CtxExpr::var("e"),
            CtxType::Pair(a, b) => CtxExpr::Pair(Box::new(self.term(a, env, d)), Box::new(self.term(b, env, d))),
            CtxType::Either(a, b) => {
                if self.rng.gen() {
                    CtxExpr::Inl(Box::new(self.term(a, env, d)))
                } else {
                    CtxExpr::Inr(Box::new(self.term(b, env, d)))
                }
            }
            CtxType::Arrow(a, b) => {
                let x = self.name();
                env.push((x.clone(), (**a).clone()));
                let body = self.term(b, env, d);
                env.pop();
                CtxExpr::Lam(x, (**a).clone(), Box::new(body))
            }
        }
    }

    /// A closed term of type `n -> b -> f -> e -> t`.
    fn closed(&mut self, t: &CtxType, depth: u32) -> (CtxExpr, CtxType) {
        let mut env: Vec<(String, CtxType)> = FREE.iter().map(|(x, t)| (x.to_string(), t.clone())).collect();
        let body = self.term(t, &mut env, depth);
        FREE.iter().rev().fold((body, t.clone()), |(e, ty), (x, xt)| {
            (CtxExpr::lam(x, xt.clone(), e), CtxType::arrow(xt.clone(), ty))
        })
    }
}

fn ann(e: CtxExpr, t: CtxType) -> CtxExpr {
    match e {
        CtxExpr::Var(_) | CtxExpr::Lit(_) | CtxExpr::Ann(..) => e,
        e => CtxExpr::Ann(Box::new(e), t),
    }
}

/// Replaces the `k`-th node in pre-order.
fn replace_nth(e: &CtxExpr, k: &mut usize, with: &CtxExpr) -> CtxExpr {
    if *k == 0 {
        *k = usize::MAX;
        return with.clone();
    }
    *k = k.saturating_sub(1);
    let mut go = |x: &CtxExpr| Box::new(replace_nth(x, k, with));
    match e {
        CtxExpr::Var(_) | CtxExpr::Lit(_) => e.clone(),
        CtxExpr::Lam(x, t, b) => CtxExpr::Lam(x.clone(), t.clone(), go(b)),
        CtxExpr::App(a, b) => {
            let a = go(a);
            CtxExpr::App(a, go(b))
        }
        CtxExpr::Pair(a, b) => {
            let a = go(a);
            CtxExpr::Pair(a, go(b))
        }
        CtxExpr::Fst(a) => CtxExpr::Fst(go(a)),
        CtxExpr::Snd(a) => CtxExpr::Snd(go(a)),
        CtxExpr::Inl(a) => CtxExpr::Inl(go(a)),
        CtxExpr::Inr(a) => CtxExpr::Inr(go(a)),
        CtxExpr::Case(s, x, l, y, r) => {
            let s = go(s);
            let l = go(l);
            CtxExpr::Case(s, x.clone(), l, y.clone(), go(r))
        }
        CtxExpr::Let(x, a, b) => {
            let a = go(a);
            CtxExpr::Let(x.clone(), a, go(b))
        }
        CtxExpr::Ann(a, t) => CtxExpr::Ann(go(a), t.clone()),
        CtxExpr::Io(op, a) => CtxExpr::Io(*op, go(a)),
    }
}

fn ill_typed() -> Vec<CtxExpr> {
    ["fst 3", "io Read \"x\"", "3 4", "unbound_name", "snd ()", "io Write 1", "len 5", "io Select stdout"]
        .into_iter()
        .map(|s| parse_expr(s).unwrap())
        .collect()
}

fn desc_of(t: &CtxType) -> Option<TypeDesc> {
    Some(match t {
        CtxType::Unit => TypeDesc::Unit,
        CtxType::Int => TypeDesc::Int,
        CtxType::Bytes => TypeDesc::Bytes,
        CtxType::FileDescr => TypeDesc::FileDescr,
        CtxType::Err => TypeDesc::Err,
        CtxType::Pair(a, b) => TypeDesc::pair(desc_of(a)?, desc_of(b)?),
        CtxType::Either(a, b) => TypeDesc::either(desc_of(a)?, desc_of(b)?),
        CtxType::Arrow(a, b) => TypeDesc::arrow(desc_of(a)?, desc_of(b)?),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn generated_terms_typecheck(seed in any::<u64>(), depth in 0u32..5) {
        let mut g = Gen::new(seed);
        let t = g.ty(2);
        let (e, ty) = g.closed(&t, depth);
        prop_assert_eq!(typecheck(&e, &ty), Ok(Adapter::Exact), "{}", pretty(&e));
    }

    #[test]
    fn printing_round_trips(seed in any::<u64>(), depth in 0u32..6) {
        let mut g = Gen::new(seed);
        let t = g.ty(2);
        let (e, _) = g.closed(&t, depth);
        let text = pretty(&e);
        prop_assert_eq!(parse_expr(&text), Ok(e), "{}", text);
    }

    #[test]
    fn one_bad_subterm_is_rejected(seed in any::<u64>(), depth in 1u32..5, pick in any::<prop::sample::Index>(), bad in 0usize..8) {
        let mut g = Gen::new(seed);
        let t = g.ty(2);
        let (e, ty) = g.closed(&t, depth);
        // Skip the four binders that close the term.
        let size = e.size();
        let mut k = 4 + pick.index(size - 4);
        let mutated = replace_nth(&e, &mut k, &ill_typed()[bad]);
        prop_assert!(typecheck(&mutated, &ty).is_err(), "{}", pretty(&mutated));
        prop_assert_eq!(parse_expr(&pretty(&mutated)), Ok(mutated));
    }

    #[test]
    fn parser_is_total(src in "\\PC{0,60}") {
        if let Ok(e) = parse_expr(&src) {
            let _ = typecheck(&e, &CtxType::Int);
            prop_assert_eq!(parse_expr(&pretty(&e)), Ok(e));
        }
    }

    #[test]
    fn parser_is_total_on_token_soup(toks in prop::collection::vec(prop::sample::select(vec![
        "\\", "x", ":", "int", ".", "(", ")", ",", "->", "=>", "|", "=", "*", "let", "in", "case", "of",
        "inl", "inr", "fst", "snd", "io", "Read", "either", "unit", "3", "-4", "\"s\"", "--c\n",
    ]), 0..30)) {
        let src = toks.join(" ");
        if let Ok(e) = parse_expr(&src) {
            let _ = typecheck(&e, &CtxType::Int);
            prop_assert_eq!(parse_expr(&pretty(&e)), Ok(e));
        }
    }

    #[test]
    fn evaluation_preserves_types(seed in any::<u64>(), depth in 0u32..5) {
        let mut g = Gen::new(seed);
        let t = g.ty(1);
        let (e, ty) = g.closed(&t, depth);
        let Some(td) = desc_of(&t) else { return Ok(()) };
        let tr = compile_source(&pretty(&e), &ty).map_err(|err| TestCaseError::fail(err.to_string()))?;
        let args: Vec<DynValue<()>> = vec![
            DynValue::Int(2),
            DynValue::Bytes(b"/temp/a".to_vec()),
            DynValue::Fd(1),
            DynValue::Err(ErrCode::Enoent),
        ];
        let policy = Policy::new("files", |_: &(), c: &IoCall| !matches!(c, IoCall::Socket));
        let whole = args.into_iter().fold(tr.eval::<()>(enforce_policy(policy)), |c, a| {
            c.bind(move |f| f.as_fun().expect("a function").apply(a.clone()))
        });
        let world = World::new().with_file("/temp/a", b"alpha");
        let run = interpret(whole, world, &stateless_mstate());
        prop_assert!(run.result.conforms(&td), "{} does not have type {}", run.result, t);
    }
}

#[test]
fn keywords_are_not_variables() {
    assert!(is_keyword("case") && is_keyword("Inl") && !is_keyword("concat"));
    assert!(parse_expr("\\let:int. 1").is_err());
}

#[test]
fn values_in_dynvalue_form() {
    let tr = compile_source("(inl 3 : either int unit)", &CtxType::either(CtxType::Int, CtxType::Unit)).unwrap();
    let run = interpret(
        tr.eval::<()>(enforce_policy(Policy::new("none", |_: &(), _: &IoCall| false))),
        World::new(),
        &stateless_mstate(),
    );
    assert_eq!(run.result, DynValue::inl(DynValue::Int(3)));
}
