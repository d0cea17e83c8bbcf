//! The web server case study: a select loop that hands each valid request
//! to an untrusted handler together with a `send` callback.

use std::sync::Arc;

use super::http::{http_response, valid_http_request, valid_http_response};
use crate::contracts::{ArrowSpec, Check, CheckTree, DynFn, DynValue, TypeDesc};
use crate::effect::{Caller, Comp, ErrCode, Fd, History, IoCall, IoValue, ProgIo, SockOpt, Trace};
use crate::linker::{SourceInterface, SourceProg, TargetCtx};
use crate::monitor::{did_not_respond, is_opened_by_ctx, webserver_mstate, wrote_to, Policy, WebState};
use crate::traces::{enforced_locally, every_request_gets_a_response, in_folder, PolicySpec, PostCond};

pub type WebValue = DynValue<WebState>;
pub type WebCtx = TargetCtx<WebState>;

pub const SERVE_DIR: &str = "/temp";
pub const PORT: u16 = 3000;

/// Which access-control rules the handler runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WebPolicy {
    /// Handlers may open, read and close their own files under `/temp`.
    Standard,
    /// As `Standard`, and handlers may also write to files they opened.
    AllowAllInTmp,
}

impl WebPolicy {
    pub fn name(self) -> &'static str {
        match self {
            WebPolicy::Standard => "webserver",
            WebPolicy::AllowAllInTmp => "allow_all_in_tmp",
        }
    }

    pub fn from_name(name: &str) -> Option<WebPolicy> {
        match name {
            "webserver" => Some(WebPolicy::Standard),
            "allow_all_in_tmp" => Some(WebPolicy::AllowAllInTmp),
            _ => None,
        }
    }
}

/// `bytes -> either unit err`
pub fn send_type() -> TypeDesc {
    TypeDesc::io_arrow(TypeDesc::Bytes, TypeDesc::Unit)
}

/// `(fd * (bytes * send)) -> either unit err`
pub fn handler_type() -> TypeDesc {
    TypeDesc::io_arrow(
        TypeDesc::pair(TypeDesc::FileDescr, TypeDesc::pair(TypeDesc::Bytes, send_type())),
        TypeDesc::Unit,
    )
}

pub fn sigma(variant: WebPolicy) -> PolicySpec {
    PolicySpec::new(variant.name(), move |h: &History, caller, call: &IoCall| match (caller, call) {
        (Caller::Ctx, IoCall::Openfile { path, .. }) => in_folder(path, SERVE_DIR),
        (Caller::Ctx, IoCall::Read(fd)) | (Caller::Ctx, IoCall::Close(fd)) => is_opened_by_ctx(*fd, h),
        (Caller::Ctx, IoCall::Write(fd, _)) if variant == WebPolicy::AllowAllInTmp => is_opened_by_ctx(*fd, h),
        (Caller::Prog, IoCall::Write(..)) => true,
        _ => false,
    })
}

pub fn pi(variant: WebPolicy) -> Policy<WebState> {
    Policy::new(variant.name(), move |s: &WebState, call: &IoCall| match call {
        IoCall::Openfile { path, .. } => in_folder(path, SERVE_DIR),
        IoCall::Read(fd) | IoCall::Close(fd) => s.ctx_opened.contains(fd),
        IoCall::Write(fd, _) if variant == WebPolicy::AllowAllInTmp => s.ctx_opened.contains(fd),
        _ => false,
    })
}

fn client_of(x: &WebValue) -> Option<Fd> {
    x.components()?.0.as_fd()
}

/// An error result, or a first write to the client during the call.
pub fn handler_check() -> Check<WebState> {
    Check::new("handler", |x: &WebValue, s0: &WebState, r: &WebValue, s1: &WebState| {
        r.is_inr() || client_of(x).is_some_and(|c| !s0.written.contains(&c) && s1.written.contains(&c))
    })
}

/// Nothing has been sent for this request yet, and the bytes are a
/// well-formed response.
pub fn send_check() -> Check<WebState> {
    Check::new("send", |res: &WebValue, s0: &WebState, _: &WebValue, _: &WebState| {
        !s0.responded && res.as_bytes().is_some_and(valid_http_response)
    })
}

pub fn handler_checks() -> CheckTree<WebState> {
    CheckTree::node(
        handler_check(),
        CheckTree::empty(
            CheckTree::Leaf,
            CheckTree::empty(CheckTree::Leaf, CheckTree::node(send_check(), CheckTree::Leaf, CheckTree::Leaf)),
        ),
        CheckTree::Leaf,
    )
}

pub fn handler_specs(variant: WebPolicy) -> Vec<ArrowSpec<WebState>> {
    let sig = sigma(variant);
    vec![
        ArrowSpec::new(
            "handler",
            |_, h| did_not_respond(h),
            move |x, h, r, lt| {
                let local = History::from_chronological(lt.events().to_vec());
                (client_of(x).is_some_and(|c| wrote_to(c, &local)) || r.is_inr()) && enforced_locally(&sig, h, lt)
            },
        ),
        ArrowSpec::new(
            "send",
            |res, h| did_not_respond(h) && res.as_bytes().is_some_and(valid_http_response),
            |_, _, _, lt: &Trace| {
                matches!(lt.events(), [e] if e.caller == Caller::Prog && matches!(e.call, IoCall::Write(..)))
            },
        ),
    ]
}

/// Every accepted connection is written to. The server does not promise
/// this: a spent iteration budget leaves accepted clients unread.
pub fn every_connection_answered(lt: &Trace) -> bool {
    let mut open = Vec::new();
    for e in lt {
        match (&e.call, &e.result) {
            (IoCall::Accept(_), Ok(IoValue::Fd(c))) if e.caller == Caller::Prog => open.push(*c),
            (IoCall::Write(fd, _), _) => open.retain(|c| c != fd),
            _ => {}
        }
    }
    open.is_empty()
}

pub fn psi() -> PostCond {
    PostCond::from_trace("every_request_gets_a_response", every_request_gets_a_response)
}

pub fn interface(variant: WebPolicy) -> SourceInterface<WebState> {
    SourceInterface {
        name: variant.name().to_string(),
        ctype: handler_type(),
        specs: handler_specs(variant),
        sigma: sigma(variant),
        pi: pi(variant),
        cks: handler_checks(),
        psi: psi(),
        mstate: webserver_mstate(),
    }
}

/// The server. Each loop iteration is one `select`; a connection costs one
/// iteration to accept and one to serve. Returns the number of clients
/// served.
pub fn web_server(max_iterations: usize) -> SourceProg<WebState> {
    Arc::new(move |io: ProgIo, handler: Result<WebValue, ErrCode>| {
        let handler = handler.ok();
        io.socket().bind(move |r| match r {
            Ok(IoValue::Fd(s)) => io
                .setsockopt(s, SockOpt::ReuseAddr, true)
                .then(io.bind_addr(s, "0.0.0.0", PORT))
                .then(io.listen(s, 5))
                .then(io.set_nonblock(s))
                .bind(move |_| serve(io, handler, s, Vec::new(), 0, max_iterations)),
            _ => Comp::ret(0),
        })
    })
}

fn serve(
    io: ProgIo,
    handler: Option<WebValue>,
    s: Fd,
    clients: Vec<Fd>,
    served: i64,
    budget: usize,
) -> Comp<WebState, i64> {
    if budget == 0 {
        return Comp::ret(served);
    }
    let mut watched = vec![s];
    watched.extend(&clients);
    io.select(watched).bind(move |r| match r {
        Ok(IoValue::Fd(fd)) if fd == s => io.accept(s).bind(move |a| {
            let mut clients = clients;
            if let Ok(IoValue::Fd(c)) = a {
                clients.push(c);
            }
            serve(io, handler, s, clients, served, budget - 1)
        }),
        Ok(IoValue::Fd(c)) => handle_client(io, handler.clone(), c).bind(move |_| {
            let clients = clients.into_iter().filter(|x| *x != c).collect();
            serve(io, handler, s, clients, served + 1, budget - 1)
        }),
        _ => Comp::ret(served),
    })
}

fn handle_client(io: ProgIo, handler: Option<WebValue>, c: Fd) -> Comp<WebState, ()> {
    io.read(c).bind(move |r| {
        let respond = match (r, handler) {
            (Ok(IoValue::Bytes(req)), Some(h)) if valid_http_request(&req) => {
                let arg = DynValue::pair(DynValue::Fd(c), DynValue::pair(DynValue::Bytes(req), send(io, c)));
                match h.as_fun() {
                    Some(f) => f.apply(arg).bind(move |res| {
                        if res.is_inl() {
                            Comp::ret(())
                        } else {
                            send_error(io, c)
                        }
                    }),
                    None => send_error(io, c),
                }
            }
            (Ok(_), _) => send_error(io, c),
            (Err(_), _) => Comp::ret(()),
        };
        respond.bind(move |_| io.close(c).map(|_| ()))
    })
}

/// The callback handed to the handler: a plain write to the client.
fn send(io: ProgIo, c: Fd) -> WebValue {
    DynValue::Fun(DynFn::new(move |res: WebValue| match res.as_bytes() {
        Some(b) => io.write(c, b.to_vec()).map(DynValue::from_io),
        None => Comp::ret(DynValue::fail(ErrCode::Einval)),
    }))
}

fn send_error(io: ProgIo, c: Fd) -> Comp<WebState, ()> {
    io.write(c, http_response(400, b"")).map(|_| ())
}
