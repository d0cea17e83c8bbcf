//! Monad laws for computations, observed through the interpreter, and the
//! laws every shipped monitor state must satisfy.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seclink::effect::{interpret, Caller, Comp, Event, History, IoCall, IoResult, IoValue, ProgIo, Trace, World};
use seclink::gen::{random_trace, Pools};
use seclink::monitor::{
    enforce_policy, full_trace_mstate, last_event_mstate, stateless_mstate, webserver_mstate, MStateDesc, MonitorState,
    Policy,
};

fn world() -> World {
    World::new()
        .with_file("/temp/a", b"alpha")
        .with_file("/temp/b", b"beta")
        .with_connection("c", b"GET /a HTTP/1.1\r\n\r\n".to_vec())
}

/// A small program step chosen by `code`; which call it makes depends on
/// the value it is given, so continuations really use their argument.
fn step(code: u8, x: i64) -> Comp<(), i64> {
    let io = ProgIo::new();
    let fd = 3 + (x.unsigned_abs() % 3) as u32;
    let tag = |r: IoResult| match r {
        Ok(IoValue::Fd(fd)) => i64::from(fd),
        Ok(IoValue::Bytes(b)) => b.len() as i64,
        Ok(IoValue::Unit) => 1,
        Err(_) => -1,
    };
    match code % 6 {
        0 => Comp::ret(x + 1),
        1 => io.openfile("/temp/a", &[], 0).map(tag),
        2 => io.read(fd).map(tag),
        3 => io.write(fd, x.to_string().into_bytes()).map(tag),
        4 => io.close(fd).map(move |r| tag(r) + x),
        _ => io.socket().map(tag),
    }
}

fn chain(codes: Vec<u8>, start: i64) -> Comp<(), i64> {
    codes.into_iter().fold(Comp::ret(start), |c, k| c.bind(move |x| step(k, x)))
}

fn observe(c: Comp<(), i64>) -> (i64, Trace) {
    let run = interpret(c, world(), &stateless_mstate());
    (run.result, run.local)
}

proptest! {
    #[test]
    fn left_identity(a in -5i64..5, k in any::<u8>()) {
        prop_assert_eq!(observe(Comp::ret(a).bind(move |x| step(k, x))), observe(step(k, a)));
    }

    #[test]
    fn right_identity(codes in prop::collection::vec(any::<u8>(), 0..8)) {
        let m = || chain(codes.clone(), 0);
        prop_assert_eq!(observe(m().bind(Comp::ret)), observe(m()));
    }

    #[test]
    fn associativity(
        codes in prop::collection::vec(any::<u8>(), 0..6),
        f in prop::collection::vec(any::<u8>(), 0..4),
        g in prop::collection::vec(any::<u8>(), 0..4),
    ) {
        let (f1, g1, f2, g2) = (f.clone(), g.clone(), f, g);
        let left = chain(codes.clone(), 0).bind(move |x| chain(f1, x)).bind(move |y| chain(g1, y));
        let right = chain(codes, 0).bind(move |x| chain(f2, x).bind(move |y| chain(g2, y)));
        prop_assert_eq!(observe(left), observe(right));
    }

    #[test]
    fn map_is_bind_then_return(codes in prop::collection::vec(any::<u8>(), 0..8)) {
        let via_map = chain(codes.clone(), 0).map(|x| x * 2);
        let via_bind = chain(codes, 0).bind(|x| Comp::ret(x * 2));
        prop_assert_eq!(observe(via_map), observe(via_bind));
    }

    #[test]
    fn program_events_are_tagged_prog(codes in prop::collection::vec(any::<u8>(), 0..12)) {
        let run = interpret(chain(codes, 0), world(), &stateless_mstate());
        prop_assert!(run.local.iter().all(|e| e.caller == Caller::Prog));
        prop_assert_eq!(run.audit.mediated_calls, 0);
        prop_assert_eq!(run.history.chronological(), run.local.events());
    }
}

fn preserves<S: MonitorState>(desc: &MStateDesc<S>, t: &Trace) -> bool {
    let mut s = desc.init().clone();
    let mut h = History::empty();
    desc.abstracts(&s, &h)
        && t.iter().all(|e| {
            s = desc.update(&s, e);
            h.push(e.clone());
            desc.abstracts(&s, &h)
        })
}

proptest! {
    #[test]
    fn shipped_states_abstract_their_histories(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_trace(&mut rng, &Pools::default(), 20);
        prop_assert!(preserves(&webserver_mstate(), &t));
        prop_assert!(preserves(&full_trace_mstate(), &t));
        prop_assert!(preserves(&last_event_mstate(), &t));
        prop_assert!(preserves(&stateless_mstate(), &t));
    }

    #[test]
    fn replay_agrees_with_incremental_updates(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_trace(&mut rng, &Pools::default(), 20);
        let desc = webserver_mstate();
        let h = History::from_chronological(t.events().to_vec());
        let folded = t.iter().fold(desc.init().clone(), |s, e| desc.update(&s, e));
        prop_assert_eq!(desc.replay(&h), folded);
    }

    #[test]
    fn denied_calls_leave_no_trace(path in "/[a-z]{1,6}") {
        let deny = Policy::new("deny", |_: &(), _: &IoCall| false);
        let run = interpret(enforce_policy(deny).call(IoCall::open(path)), world(), &stateless_mstate());
        prop_assert!(run.result.is_err());
        prop_assert!(run.local.is_empty());
        prop_assert_eq!(run.diagnostics.len(), 1);
    }

    #[test]
    fn allowed_calls_leave_one_ctx_event(fd in 0u32..8) {
        let allow = Policy::new("allow", |_: &(), _: &IoCall| true);
        let run = interpret(enforce_policy(allow).call(IoCall::Read(fd)), world(), &stateless_mstate());
        prop_assert_eq!(run.local.len(), 1);
        let e: &Event = &run.local.events()[0];
        prop_assert_eq!(e.caller, Caller::Ctx);
        prop_assert_eq!(&e.result, &run.result);
        prop_assert!(run.audit.capability_discipline_holds());
    }
}
