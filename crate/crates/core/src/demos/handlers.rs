//! Request handlers: five adversarial ones and a benign file server, each
//! hand-written and also as context-language source.

use std::sync::Arc;

use super::http::{http_response, request_path};
use super::webserver::{WebCtx, WebValue, SERVE_DIR};
use crate::contracts::{DynFn, DynValue};
use crate::effect::{Comp, ErrCode, Fd, IoCall, IoResult, IoValue, Mechanism, OpenFlag};
use crate::monitor::{SecureIo, WebState};

pub const HANDLER_NAMES: [&str; 6] = ["adv1", "adv2", "adv3", "adv4", "adv5", "benign"];

/// The mechanism expected to stop each handler; `None` for the benign one.
pub fn expected_mechanism(name: &str) -> Option<Mechanism> {
    match name.trim_start_matches("dsl-") {
        "adv1" => Some(Mechanism::PostContract),
        "adv2" => Some(Mechanism::PreContract),
        "adv3" | "adv4" | "adv5" => Some(Mechanism::Monitor),
        _ => None,
    }
}

pub fn describe(name: &str) -> &'static str {
    match name.trim_start_matches("dsl-") {
        "adv1" => "claims success without responding",
        "adv2" => "sends an invalid response",
        "adv3" => "opens /etc/passwd",
        "adv4" => "writes to the client directly",
        "adv5" => "opens a socket",
        "benign" => "serves files from /temp",
        _ => "",
    }
}

pub fn dsl_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "adv1" => include_str!("../../ctx/webserver/adv1.ctx"),
        "adv2" => include_str!("../../ctx/webserver/adv2.ctx"),
        "adv3" => include_str!("../../ctx/webserver/adv3.ctx"),
        "adv4" => include_str!("../../ctx/webserver/adv4.ctx"),
        "adv5" => include_str!("../../ctx/webserver/adv5.ctx"),
        "benign" => include_str!("../../ctx/webserver/benign.ctx"),
        _ => return None,
    })
}

pub fn handler(name: &str) -> Option<WebCtx> {
    Some(match name {
        "adv1" => adversarial_handler1(),
        "adv2" => adversarial_handler2(),
        "adv3" => adversarial_handler3(),
        "adv4" => adversarial_handler4(),
        "adv5" => adversarial_handler5(),
        "benign" => benign_handler(),
        _ => return None,
    })
}

struct Args {
    client: Fd,
    req: Vec<u8>,
    send: DynFn<WebState>,
}

fn args(x: &WebValue) -> Option<Args> {
    let (c, rest) = x.components()?;
    let (req, send) = rest.components()?;
    Some(Args {
        client: c.as_fd()?,
        req: req.as_bytes()?.to_vec(),
        send: send.as_fun()?.clone(),
    })
}

fn unit_result(r: IoResult) -> WebValue {
    match r {
        Ok(_) => DynValue::ok(DynValue::Unit),
        Err(e) => DynValue::fail(e),
    }
}

fn with_args(body: impl Fn(Args) -> Comp<WebState, WebValue> + Send + Sync + 'static) -> WebValue {
    DynValue::Fun(DynFn::new(move |x: WebValue| match args(&x) {
        Some(a) => body(a),
        None => Comp::ret(DynValue::fail(ErrCode::Einval)),
    }))
}

fn ctx(f: impl Fn(SecureIo<WebState>) -> WebValue + Send + Sync + 'static) -> WebCtx {
    Arc::new(f)
}

pub fn adversarial_handler1() -> WebCtx {
    ctx(|_| with_args(|_| Comp::ret(DynValue::ok(DynValue::Unit))))
}

pub fn adversarial_handler2() -> WebCtx {
    ctx(|_| with_args(|a| a.send.apply(DynValue::Bytes(b"hello".to_vec()))))
}

pub fn adversarial_handler3() -> WebCtx {
    ctx(|sec| {
        with_args(move |_| {
            let call = IoCall::Openfile {
                path: "/etc/passwd".into(),
                flags: vec![OpenFlag::RdWr],
                mode: 0x650,
            };
            sec.call(call).map(unit_result)
        })
    })
}

pub fn adversarial_handler4() -> WebCtx {
    ctx(|sec| with_args(move |a| sec.call(IoCall::Write(a.client, b"hello".to_vec())).map(unit_result)))
}

pub fn adversarial_handler5() -> WebCtx {
    ctx(|sec| with_args(move |_| sec.call(IoCall::Socket).map(unit_result)))
}

/// Opens `/temp` + the request path, reads it, closes it and sends the
/// contents back; 404 when the open is refused or fails, 500 when the read
/// fails.
pub fn benign_handler() -> WebCtx {
    ctx(|sec| {
        with_args(move |a| {
            let mut path = SERVE_DIR.as_bytes().to_vec();
            path.extend(request_path(&a.req));
            let path = String::from_utf8_lossy(&path).into_owned();
            let sec = sec.clone();
            let send = a.send;
            sec.call(IoCall::open(path)).bind(move |r| match r {
                Ok(IoValue::Fd(fd)) => sec.call(IoCall::Read(fd)).bind(move |body| {
                    sec.call(IoCall::Close(fd)).bind(move |_| {
                        let res = match body {
                            Ok(IoValue::Bytes(b)) => http_response(200, &b),
                            _ => http_response(500, b""),
                        };
                        send.apply(DynValue::Bytes(res))
                    })
                }),
                _ => send.apply(DynValue::Bytes(http_response(404, b""))),
            })
        })
    })
}
