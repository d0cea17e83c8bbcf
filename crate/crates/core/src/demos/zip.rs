//! The archiving example: the program opens an archive and some inputs and
//! hands them to an untrusted `zip` function that returns a per-file
//! callback. The monitor keeps the whole history.

use std::sync::Arc;

use crate::contracts::{ArrowSpec, Check, CheckTree, DynFn, DynValue, TypeDesc};
use crate::effect::{Caller, Comp, ErrCode, Fd, History, IoCall, IoValue, OpenFlag, ProgIo, STDOUT};
use crate::linker::{SourceInterface, SourceProg, TargetCtx};
use crate::monitor::{full_trace_mstate, Policy, SecureIo};
use crate::traces::{ctx_events_respect, enforced_locally, latest_decides, PolicySpec, PostCond};

pub type ZipValue = DynValue<History>;
pub type ZipCtx = TargetCtx<History>;

pub const ARCHIVE: &str = "/out/archive.zip";
pub const INPUTS: [&str; 2] = ["/data/a.txt", "/data/b.txt"];

/// `fd` was opened by the program and has not been closed since.
pub fn is_opened_by_prog(fd: Fd, h: &History) -> bool {
    latest_decides(h, |e| match (&e.call, &e.result) {
        (IoCall::Openfile { .. }, Ok(IoValue::Fd(x))) if *x == fd && e.caller == Caller::Prog => Some(true),
        (IoCall::Close(x), Ok(_)) if *x == fd => Some(false),
        _ => None,
    })
    .unwrap_or(false)
}

/// `fd` refers to something open: the console, or the result of an open,
/// socket or accept not closed since.
pub fn is_open(fd: Fd, h: &History) -> bool {
    latest_decides(h, |e| match (&e.call, &e.result) {
        (IoCall::Openfile { .. } | IoCall::Socket | IoCall::Accept(_), Ok(IoValue::Fd(x))) if *x == fd => Some(true),
        (IoCall::Close(x), Ok(_)) if *x == fd => Some(false),
        _ => None,
    })
    .unwrap_or(fd == STDOUT)
}

/// `fd -> either unit err`
pub fn zip_file_type() -> TypeDesc {
    TypeDesc::io_arrow(TypeDesc::FileDescr, TypeDesc::Unit)
}

/// `fd -> either zip_file err`
pub fn zip_type() -> TypeDesc {
    TypeDesc::io_arrow(TypeDesc::FileDescr, zip_file_type())
}

fn allowed(h: &History, call: &IoCall) -> bool {
    match call {
        IoCall::Read(fd) | IoCall::Write(fd, _) => is_opened_by_prog(*fd, h),
        _ => false,
    }
}

pub fn sigma() -> PolicySpec {
    PolicySpec::new("zip", |h, caller, call| caller == Caller::Ctx && allowed(h, call))
}

pub fn pi() -> Policy<History> {
    Policy::new("zip", allowed)
}

fn open_fd_gate(label: &str) -> Check<History> {
    Check::always(label).with_requires(|x: &ZipValue, s0: &History| x.as_fd().is_some_and(|fd| is_open(fd, s0)))
}

pub fn zip_checks() -> CheckTree<History> {
    CheckTree::node(
        open_fd_gate("zip"),
        CheckTree::Leaf,
        CheckTree::empty(CheckTree::node(open_fd_gate("zip_file"), CheckTree::Leaf, CheckTree::Leaf), CheckTree::Leaf),
    )
}

pub fn specs() -> Vec<ArrowSpec<History>> {
    ["zip", "zip_file"]
        .into_iter()
        .map(|label| {
            let sig = sigma();
            ArrowSpec::new(
                label,
                |x: &ZipValue, h: &History| x.as_fd().is_some_and(|fd| is_open(fd, h)),
                move |_, h, _, lt| enforced_locally(&sig, h, lt),
            )
        })
        .collect()
}

pub fn psi() -> PostCond {
    let sig = sigma();
    PostCond::new("ctx_only_touches_prog_fds", move |h, _, lt| ctx_events_respect(&sig, h, lt))
}

pub fn interface() -> SourceInterface<History> {
    SourceInterface {
        name: "zip".into(),
        ctype: zip_type(),
        specs: specs(),
        sigma: sigma(),
        pi: pi(),
        cks: zip_checks(),
        psi: psi(),
        mstate: full_trace_mstate(),
    }
}

pub const PROGRAM_NAMES: [&str; 2] = ["zip", "zip-close-early"];

/// Opens the archive and every input that exists, asks the context for a
/// zip_file callback and feeds it each input. With `close_early` the last
/// input is closed before it is handed over. Returns the number of inputs
/// archived, or -1 when the context refuses.
pub fn zip_program(close_early: bool) -> SourceProg<History> {
    Arc::new(move |io: ProgIo, zip: Result<ZipValue, ErrCode>| {
        let archive = vec![OpenFlag::WrOnly, OpenFlag::Creat, OpenFlag::Trunc];
        io.openfile(ARCHIVE, &archive, 0o644).bind(move |a| {
            open_inputs(io, INPUTS.to_vec(), Vec::new()).bind(move |inputs| match (a, zip) {
                (Ok(IoValue::Fd(afd)), Ok(zip)) => {
                    let prep = if close_early {
                        match inputs.last() {
                            Some(&last) => io.close(last).map(|_| ()),
                            None => Comp::ret(()),
                        }
                    } else {
                        Comp::ret(())
                    };
                    prep.bind(move |_| apply(&zip, DynValue::Fd(afd))).bind(move |r| match r {
                        DynValue::Inl(zf) => add_all(*zf, inputs.clone(), 0)
                            .bind(move |n| close_all(io, afd, inputs, close_early).map(move |_| n)),
                        _ => close_all(io, afd, inputs, close_early).map(|_| -1),
                    })
                }
                (Ok(IoValue::Fd(afd)), Err(_)) => close_all(io, afd, inputs, false).map(|_| -1),
                _ => Comp::ret(-1),
            })
        })
    })
}

fn apply(f: &ZipValue, x: ZipValue) -> Comp<History, ZipValue> {
    match f.as_fun() {
        Some(f) => f.apply(x),
        None => Comp::ret(DynValue::fail(ErrCode::Einval)),
    }
}

fn open_inputs(io: ProgIo, mut paths: Vec<&'static str>, mut fds: Vec<Fd>) -> Comp<History, Vec<Fd>> {
    if paths.is_empty() {
        return Comp::ret(fds);
    }
    let path = paths.remove(0);
    io.openfile(path, &[OpenFlag::RdOnly], 0).bind(move |r| {
        if let Ok(IoValue::Fd(fd)) = r {
            fds.push(fd);
        }
        open_inputs(io, paths, fds)
    })
}

fn add_all(zf: ZipValue, mut fds: Vec<Fd>, done: i64) -> Comp<History, i64> {
    if fds.is_empty() {
        return Comp::ret(done);
    }
    let fd = fds.remove(0);
    apply(&zf, DynValue::Fd(fd)).bind(move |r| add_all(zf, fds, done + i64::from(r.is_inl())))
}

fn close_all(io: ProgIo, afd: Fd, inputs: Vec<Fd>, skip_last: bool) -> Comp<History, ()> {
    let n = if skip_last { inputs.len().saturating_sub(1) } else { inputs.len() };
    let mut c = io.close(afd).map(|_| ());
    for fd in inputs.into_iter().take(n) {
        c = c.bind(move |_| io.close(fd).map(|_| ()));
    }
    c
}

pub const CONTEXT_NAMES: [&str; 6] = ["benign", "own-file", "stdout-leak", "refuse", "ill-shaped", "header-only"];
pub const DSL_CONTEXT_NAMES: [&str; 2] = ["benign", "own-file"];

pub fn dsl_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "benign" => include_str!("../../ctx/zip/benign.ctx"),
        "own-file" => include_str!("../../ctx/zip/own-file.ctx"),
        _ => return None,
    })
}

fn zctx(f: impl Fn(SecureIo<History>) -> ZipValue + Send + Sync + 'static) -> ZipCtx {
    Arc::new(f)
}

fn unit_result(r: crate::effect::IoResult) -> ZipValue {
    match r {
        Ok(_) => DynValue::ok(DynValue::Unit),
        Err(e) => DynValue::fail(e),
    }
}

/// Reads `f` and appends an entry for it to the archive.
fn entry_writer(sec: SecureIo<History>, afd: Fd) -> ZipValue {
    DynValue::Fun(DynFn::new(move |f: ZipValue| {
        let sec = sec.clone();
        let Some(fd) = f.as_fd() else {
            return Comp::ret(DynValue::fail(ErrCode::Einval));
        };
        sec.call(IoCall::Read(fd)).bind(move |r| match r {
            Ok(IoValue::Bytes(b)) => {
                let mut entry = b"entry ".to_vec();
                entry.extend(b);
                entry.push(b'\n');
                sec.call(IoCall::Write(afd, entry)).map(unit_result)
            }
            Ok(_) => Comp::ret(DynValue::fail(ErrCode::Einval)),
            Err(e) => Comp::ret(DynValue::fail(e)),
        })
    }))
}

fn with_archive(body: impl Fn(SecureIo<History>, Fd) -> Comp<History, ZipValue> + Send + Sync + 'static) -> ZipCtx {
    let body = Arc::new(body);
    zctx(move |sec| {
        let body = body.clone();
        DynValue::Fun(DynFn::new(move |a: ZipValue| match a.as_fd() {
            Some(afd) => body(sec.clone(), afd),
            None => Comp::ret(DynValue::fail(ErrCode::Einval)),
        }))
    })
}

fn header(sec: &SecureIo<History>, afd: Fd) -> Comp<History, crate::effect::IoResult> {
    sec.call(IoCall::Write(afd, b"ZIPv1\n".to_vec()))
}

pub fn context(name: &str) -> Option<ZipCtx> {
    Some(match name {
        "benign" => with_archive(|sec, afd| {
            let writer = entry_writer(sec.clone(), afd);
            header(&sec, afd).map(move |_| DynValue::ok(writer))
        }),
        "own-file" => with_archive(|sec, afd| {
            let writer = entry_writer(sec.clone(), afd);
            let again = sec.clone();
            sec.call(IoCall::open("/etc/passwd"))
                .bind(move |_| header(&again, afd))
                .map(move |_| DynValue::ok(writer))
        }),
        "stdout-leak" => with_archive(|sec, afd| {
            let leak = sec.clone();
            let writer = DynValue::Fun(DynFn::new(move |f: ZipValue| {
                let leak = leak.clone();
                let fd = f.as_fd().unwrap_or(0);
                leak.call(IoCall::Read(fd)).bind(move |r| {
                    let bytes = match r {
                        Ok(IoValue::Bytes(b)) => b,
                        _ => Vec::new(),
                    };
                    leak.call(IoCall::Write(STDOUT, bytes)).map(unit_result)
                })
            }));
            header(&sec, afd).map(move |_| DynValue::ok(writer))
        }),
        "refuse" => with_archive(|_, _| Comp::ret(DynValue::fail(ErrCode::Einval))),
        "ill-shaped" => zctx(|_| DynValue::Int(3)),
        "header-only" => with_archive(|sec, afd| {
            let noop = DynValue::Fun(DynFn::new(|_| Comp::ret(DynValue::ok(DynValue::Unit))));
            header(&sec, afd).map(move |_| DynValue::ok(noop))
        }),
        _ => return None,
    })
}
