//! Random events, traces and boundary values for the validation suites.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::contracts::{DynFn, DynValue, TypeDesc};
use crate::effect::{
    Caller, Comp, ErrCode, Event, Fd, History, IoCall, IoOp, IoResult, IoValue, Mechanism, OpenFlag, SockOpt, Trace,
};
use crate::monitor::MonitorState;
use crate::traces::PolicySpec;

/// The small universes samples are drawn from. Keeping them small makes
/// collisions (the same descriptor opened, read, written, closed) common.
#[derive(Debug, Clone)]
pub struct Pools {
    pub fds: Vec<Fd>,
    pub paths: Vec<String>,
    pub payloads: Vec<Vec<u8>>,
}

impl Default for Pools {
    fn default() -> Self {
        Pools {
            fds: vec![1, 3, 4, 5],
            paths: [
                "/temp/a",
                "/temp/index.html",
                "/temp/../etc/passwd",
                "/etc/passwd",
                "/data/in.txt",
                "/archive.zip",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
            payloads: vec![
                b"GET /index.html HTTP/1.1\r\nHost: x\r\n\r\n".to_vec(),
                b"HTTP/1.1 200 OK\r\nContent-Length: 2\r\n\r\nhi".to_vec(),
                b"HTTP/1.0 404 Not Found\r\n\r\n".to_vec(),
                b"hello".to_vec(),
                Vec::new(),
                b"Openfile".to_vec(),
                b"Read".to_vec(),
                b"Write".to_vec(),
                b"Close".to_vec(),
                b"Socket".to_vec(),
            ],
        }
    }
}

const OP_WEIGHTS: [(IoOp, u32); 11] = [
    (IoOp::Openfile, 6),
    (IoOp::Read, 6),
    (IoOp::Write, 6),
    (IoOp::Close, 5),
    (IoOp::Socket, 1),
    (IoOp::Setsockopt, 1),
    (IoOp::Bind, 1),
    (IoOp::Listen, 1),
    (IoOp::Accept, 1),
    (IoOp::Select, 1),
    (IoOp::SetNonblock, 1),
];

pub fn random_op<R: Rng>(rng: &mut R) -> IoOp {
    OP_WEIGHTS.choose_weighted(rng, |(_, w)| *w).map(|(op, _)| *op).unwrap()
}

pub fn random_call_for<R: Rng>(rng: &mut R, op: IoOp, pools: &Pools) -> IoCall {
    let fd = *pools.fds.choose(rng).unwrap();
    match op {
        IoOp::Openfile => IoCall::Openfile {
            path: pools.paths.choose(rng).unwrap().clone(),
            flags: vec![*[OpenFlag::RdOnly, OpenFlag::WrOnly, OpenFlag::RdWr].choose(rng).unwrap()],
            mode: 0,
        },
        IoOp::Read => IoCall::Read(fd),
        IoOp::Write => IoCall::Write(fd, pools.payloads.choose(rng).unwrap().clone()),
        IoOp::Close => IoCall::Close(fd),
        IoOp::Socket => IoCall::Socket,
        IoOp::Setsockopt => IoCall::Setsockopt(fd, SockOpt::ReuseAddr, rng.gen()),
        IoOp::Bind => IoCall::Bind(fd, "0.0.0.0".into(), 3000),
        IoOp::Listen => IoCall::Listen(fd, 5),
        IoOp::Accept => IoCall::Accept(fd),
        IoOp::Select => {
            let n = rng.gen_range(1..=pools.fds.len());
            IoCall::Select(pools.fds.choose_multiple(rng, n).copied().collect())
        }
        IoOp::SetNonblock => IoCall::SetNonblock(fd),
    }
}

pub fn random_call<R: Rng>(rng: &mut R, pools: &Pools) -> IoCall {
    let op = random_op(rng);
    random_call_for(rng, op, pools)
}

const WORLD_ERRORS: [ErrCode; 5] = [
    ErrCode::Enoent,
    ErrCode::Ebadf,
    ErrCode::Einval,
    ErrCode::Eagain,
    ErrCode::Enotsock,
];

/// A result of the right shape for `call`; succeeds about three times in
/// four.
pub fn random_result<R: Rng>(rng: &mut R, call: &IoCall, pools: &Pools) -> IoResult {
    if rng.gen_bool(0.25) {
        return Err(WORLD_ERRORS.choose(rng).unwrap().clone());
    }
    Ok(match call.op().result_kind() {
        crate::effect::ValueKind::Unit => IoValue::Unit,
        crate::effect::ValueKind::Fd => IoValue::Fd(*pools.fds.choose(rng).unwrap()),
        crate::effect::ValueKind::Bytes => IoValue::Bytes(pools.payloads.choose(rng).unwrap().clone()),
    })
}

pub fn random_caller<R: Rng>(rng: &mut R) -> Caller {
    if rng.gen() {
        Caller::Prog
    } else {
        Caller::Ctx
    }
}

pub fn random_event<R: Rng>(rng: &mut R, pools: &Pools) -> Event {
    let caller = random_caller(rng);
    let call = random_call(rng, pools);
    let result = random_result(rng, &call, pools);
    Event::new(caller, call, result)
}

/// Up to `max_len` unconstrained events.
pub fn random_trace<R: Rng>(rng: &mut R, pools: &Pools, max_len: usize) -> Trace {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| random_event(rng, pools)).collect()
}

pub fn random_history<R: Rng>(rng: &mut R, pools: &Pools, max_len: usize) -> History {
    History::from_chronological(random_trace(rng, pools, max_len).into_events())
}

/// Up to `max_len` events each allowed by `sigma` at the point it occurs.
/// Stops early when no allowed event turns up after a bounded search.
pub fn guided_trace<R: Rng>(rng: &mut R, pools: &Pools, sigma: &PolicySpec, h: &History, max_len: usize) -> Trace {
    let n = rng.gen_range(0..=max_len);
    let mut hist = h.clone();
    let mut lt = Trace::new();
    for _ in 0..n {
        let found = (0..40).map(|_| random_event(rng, pools)).find(|e| sigma.holds(&hist, e.caller, &e.call));
        match found {
            Some(e) => {
                hist.push(e.clone());
                lt.push(e);
            }
            None => break,
        }
    }
    lt
}

/// A random value conforming to `td`. Functions ignore their argument and
/// return a fixed random value of their codomain.
pub fn random_value<S: MonitorState, R: Rng>(rng: &mut R, td: &TypeDesc, pools: &Pools) -> DynValue<S> {
    match td {
        TypeDesc::Unit => DynValue::Unit,
        TypeDesc::Int => DynValue::Int(rng.gen_range(-3..100)),
        TypeDesc::Bytes => DynValue::Bytes(pools.payloads.choose(rng).unwrap().clone()),
        TypeDesc::FileDescr => DynValue::Fd(*pools.fds.choose(rng).unwrap()),
        TypeDesc::Err => DynValue::Err(if rng.gen_bool(0.3) {
            ErrCode::contract(Mechanism::Monitor, "sample")
        } else {
            WORLD_ERRORS.choose(rng).unwrap().clone()
        }),
        TypeDesc::Pair(a, b) => DynValue::pair(random_value(rng, a, pools), random_value(rng, b, pools)),
        TypeDesc::Either(a, b) => {
            if rng.gen() {
                DynValue::inl(random_value(rng, a, pools))
            } else {
                DynValue::inr(random_value(rng, b, pools))
            }
        }
        TypeDesc::Option(a) => {
            if rng.gen() {
                DynValue::inl(random_value(rng, a, pools))
            } else {
                DynValue::inr(DynValue::Unit)
            }
        }
        TypeDesc::Arrow(_, cod) => {
            let v: DynValue<S> = random_value(rng, cod, pools);
            DynValue::Fun(DynFn::new(move |_| Comp::ret(v.clone())))
        }
    }
}
