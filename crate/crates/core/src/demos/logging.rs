//! The logging library, linked context-first: the context drives, and every
//! IO operation it performs must be announced through the program's logger
//! immediately beforehand.

use std::sync::Arc;

use crate::contracts::{ArrowSpec, Check, CheckTree, DynFn, DynValue, TypeDesc};
use crate::effect::{Caller, Comp, Event, IoCall, IoOp, IoValue, ProgIo, STDOUT};
use crate::linker::{DualInterface, DualSourceProg, DualTargetCtx};
use crate::monitor::{last_event_mstate, Policy, SecureIo};
use crate::traces::{op_label, PolicySpec};

pub type LogState = Option<Event>;
pub type LogValue = DynValue<LogState>;
pub type LogCtx = DualTargetCtx<LogState>;

/// The event a logger call for `op` leaves behind.
pub fn log_event(op: IoOp) -> Event {
    Event::new(Caller::Prog, IoCall::Write(STDOUT, op_label(op)), Ok(IoValue::Unit))
}

/// `bytes -> either unit err`
pub fn logger_type() -> TypeDesc {
    TypeDesc::io_arrow(TypeDesc::Bytes, TypeDesc::Unit)
}

pub fn sigma() -> PolicySpec {
    PolicySpec::new("logging", |h, caller, call: &IoCall| match caller {
        Caller::Ctx => h.latest() == Some(&log_event(call.op())),
        Caller::Prog => matches!(call, IoCall::Write(..)) && h.latest().is_none_or(|e| e.caller == Caller::Ctx),
    })
}

pub fn pi() -> Policy<LogState> {
    Policy::new("logging", |s: &LogState, call: &IoCall| s.as_ref() == Some(&log_event(call.op())))
}

/// The logger may only run first or right after a context operation.
pub fn logger_check() -> Check<LogState> {
    Check::new("log", |_: &LogValue, s0: &LogState, _: &LogValue, _: &LogState| {
        s0.as_ref().is_none_or(|e| e.caller == Caller::Ctx)
    })
}

pub fn specs() -> Vec<ArrowSpec<LogState>> {
    vec![ArrowSpec::new(
        "log",
        |_, h| h.latest().is_none_or(|e| e.caller == Caller::Ctx),
        |msg, _, _, lt| {
            matches!(lt.events(), [e] if e.caller == Caller::Prog
                && matches!(&e.call, IoCall::Write(fd, b) if *fd == STDOUT && Some(b.as_slice()) == msg.as_bytes()))
        },
    )]
}

pub fn interface() -> DualInterface<LogState> {
    DualInterface {
        name: "logging".into(),
        ptype: logger_type(),
        specs: specs(),
        sigma: sigma(),
        pi: pi(),
        cks: CheckTree::node(logger_check(), CheckTree::Leaf, CheckTree::Leaf),
        mstate: last_event_mstate(),
    }
}

/// Writes its argument to the console.
pub fn logger() -> DualSourceProg<LogState> {
    Arc::new(|io: ProgIo| {
        DynValue::Fun(DynFn::new(move |msg: LogValue| match msg.as_bytes() {
            Some(b) => io.write(STDOUT, b.to_vec()).map(DynValue::from_io),
            None => Comp::ret(DynValue::fail(crate::effect::ErrCode::Einval)),
        }))
    })
}

pub const CONTEXT_NAMES: [&str; 12] = [
    "idle",
    "log-then-open",
    "full-cycle",
    "unlogged-open",
    "double-log",
    "mislabeled",
    "two-ops-one-log",
    "log-only",
    "stdout-write",
    "socket",
    "bad-argument",
    "repeat",
];

pub const DSL_CONTEXT_NAMES: [&str; 3] = ["idle", "log-then-open", "unlogged-open"];

pub fn dsl_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "idle" => include_str!("../../ctx/logging/idle.ctx"),
        "log-then-open" => include_str!("../../ctx/logging/log-then-open.ctx"),
        "unlogged-open" => include_str!("../../ctx/logging/unlogged-open.ctx"),
        _ => return None,
    })
}

const INPUT: &str = "/data/in.txt";

fn log(lib: &LogValue, op: IoOp) -> Comp<LogState, LogValue> {
    match lib.as_fun() {
        Some(f) => f.apply(DynValue::Bytes(op_label(op))),
        None => Comp::ret(DynValue::fail(crate::effect::ErrCode::Einval)),
    }
}

/// Logs `call`'s operation, performs it, and counts 1 if it succeeded.
fn logged(sec: &SecureIo<LogState>, lib: &LogValue, call: IoCall) -> Comp<LogState, (i64, Option<IoValue>)> {
    let sec = sec.clone();
    log(lib, call.op()).bind(move |_| sec.call(call).map(outcome))
}

fn outcome(r: crate::effect::IoResult) -> (i64, Option<IoValue>) {
    match r {
        Ok(v) => (1, Some(v)),
        Err(_) => (0, None),
    }
}

fn dual(f: impl Fn(SecureIo<LogState>, LogValue) -> Comp<LogState, i64> + Send + Sync + 'static) -> LogCtx {
    Arc::new(f)
}

/// The hand-written contexts. Each returns how many of its own IO calls
/// went through.
pub fn context(name: &str) -> Option<LogCtx> {
    Some(match name {
        "idle" => dual(|_, _| Comp::ret(0)),
        "log-then-open" => dual(|sec, lib| logged(&sec, &lib, IoCall::open(INPUT)).map(|(n, _)| n)),
        "full-cycle" => dual(|sec, lib| {
            logged(&sec, &lib, IoCall::open(INPUT)).bind(move |(n, v)| match v {
                Some(IoValue::Fd(fd)) => logged(&sec, &lib, IoCall::Read(fd)).bind(move |(m, _)| {
                    logged(&sec, &lib, IoCall::Close(fd)).map(move |(k, _)| n + m + k)
                }),
                _ => Comp::ret(n),
            })
        }),
        "unlogged-open" => dual(|sec, _| sec.call(IoCall::open(INPUT)).map(|r| outcome(r).0)),
        "double-log" => dual(|sec, lib| {
            log(&lib, IoOp::Openfile)
                .bind(move |_| logged(&sec, &lib, IoCall::open(INPUT)))
                .map(|(n, _)| n)
        }),
        "mislabeled" => dual(|sec, lib| {
            log(&lib, IoOp::Read).bind(move |_| sec.call(IoCall::open(INPUT)).map(|r| outcome(r).0))
        }),
        "two-ops-one-log" => dual(|sec, lib| {
            let again = sec.clone();
            logged(&sec, &lib, IoCall::open(INPUT))
                .bind(move |(n, _)| again.call(IoCall::open(INPUT)).map(move |r| n + outcome(r).0))
        }),
        "log-only" => dual(|_, lib| log(&lib, IoOp::Socket).map(|r| i64::from(r.is_inl()))),
        "stdout-write" => dual(|sec, lib| {
            logged(&sec, &lib, IoCall::Write(STDOUT, b"context says hi\n".to_vec())).map(|(n, _)| n)
        }),
        "socket" => dual(|sec, lib| logged(&sec, &lib, IoCall::Socket).map(|(n, _)| n)),
        "bad-argument" => dual(|sec, lib| {
            let call = match lib.as_fun() {
                Some(f) => f.apply(DynValue::Int(7)),
                None => Comp::ret(DynValue::Unit),
            };
            call.bind(move |_| sec.call(IoCall::open(INPUT)).map(|r| outcome(r).0))
        }),
        "repeat" => dual(|sec, lib| repeat(sec, lib, 3, 0)),
        _ => return None,
    })
}

fn repeat(sec: SecureIo<LogState>, lib: LogValue, left: u32, acc: i64) -> Comp<LogState, i64> {
    if left == 0 {
        return Comp::ret(acc);
    }
    logged(&sec, &lib, IoCall::open(INPUT)).bind(move |(n, _)| repeat(sec, lib, left - 1, acc + n))
}
