use serde::Serialize;

use super::MStateDesc;
use crate::effect::{Caller, Event, Fd, History, IoCall, IoValue};
use crate::traces::latest_decides;

/// Summary of a history kept for the web-server policy and contracts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WebState {
    pub ctx_opened: Vec<Fd>,
    pub responded: bool,
    pub written: Vec<Fd>,
}

/// The most recent event that decides `fd`'s status is a successful open by
/// the context (rather than a successful close by anyone).
pub fn is_opened_by_ctx(fd: Fd, h: &History) -> bool {
    latest_decides(h, |e| match (&e.call, &e.result) {
        (IoCall::Openfile { .. }, Ok(IoValue::Fd(x))) if *x == fd && e.caller == Caller::Ctx => Some(true),
        (IoCall::Close(x), Ok(_)) if *x == fd => Some(false),
        _ => None,
    })
    .unwrap_or(false)
}

/// No program write has happened since the program last read a request.
pub fn did_not_respond(h: &History) -> bool {
    latest_decides(h, |e| match (&e.call, &e.result, e.caller) {
        (IoCall::Write(..), _, Caller::Prog) => Some(false),
        (IoCall::Read(_), Ok(_), Caller::Prog) => Some(true),
        _ => None,
    })
    .unwrap_or(true)
}

/// Some write to `fd` appears in `h`, whatever its outcome.
pub fn wrote_to(fd: Fd, h: &History) -> bool {
    h.recent_first().any(|e| matches!(&e.call, IoCall::Write(x, _) if *x == fd))
}

fn upd(s: &WebState, e: &Event) -> WebState {
    let mut s = s.clone();
    match (&e.call, &e.result, e.caller) {
        (IoCall::Openfile { .. }, Ok(IoValue::Fd(fd)), Caller::Ctx) => {
            if !s.ctx_opened.contains(fd) {
                s.ctx_opened.push(*fd);
            }
        }
        (IoCall::Close(fd), Ok(_), _) => s.ctx_opened.retain(|x| x != fd),
        (IoCall::Read(_), Ok(_), Caller::Prog) => s.responded = false,
        (IoCall::Write(fd, _), _, caller) => {
            if caller == Caller::Prog {
                s.responded = true;
            }
            if !s.written.contains(fd) {
                s.written.push(*fd);
            }
        }
        _ => {}
    }
    s
}

fn mentioned_fds(s: &WebState, h: &History) -> Vec<Fd> {
    let mut fds: Vec<Fd> = s.ctx_opened.iter().chain(&s.written).copied().collect();
    for e in h.chronological() {
        if let Some(fd) = e.call.target_fd() {
            fds.push(fd);
        }
        if let Ok(IoValue::Fd(fd)) = e.result {
            fds.push(fd);
        }
    }
    fds.sort_unstable();
    fds.dedup();
    fds
}

fn abstracts(s: &WebState, h: &History) -> bool {
    let no_dups = |v: &Vec<Fd>| {
        let mut w = v.clone();
        w.sort_unstable();
        w.dedup();
        w.len() == v.len()
    };
    no_dups(&s.ctx_opened)
        && no_dups(&s.written)
        && s.responded == !did_not_respond(h)
        && mentioned_fds(s, h).into_iter().all(|fd| {
            s.ctx_opened.contains(&fd) == is_opened_by_ctx(fd, h) && s.written.contains(&fd) == wrote_to(fd, h)
        })
}

/// The web-server monitor state: descriptors the context opened and has
/// not closed, whether the current request has been answered, and every
/// descriptor written to so far.
pub fn webserver_mstate() -> MStateDesc<WebState> {
    MStateDesc::new("webserver", WebState::default(), upd, abstracts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect::ErrCode;

    #[test]
    fn ctx_open_then_close() {
        let d = webserver_mstate();
        let s = d.update(d.init(), &Event::new(Caller::Ctx, IoCall::open("/temp/p"), Ok(IoValue::Fd(5))));
        assert_eq!(s.ctx_opened, vec![5]);
        let s = d.update(&s, &Event::new(Caller::Ctx, IoCall::Close(5), Ok(IoValue::Unit)));
        assert!(s.ctx_opened.is_empty());
    }

    #[test]
    fn prog_write_marks_response() {
        let d = webserver_mstate();
        let s = d.update(d.init(), &Event::new(Caller::Prog, IoCall::Write(4, b"b".to_vec()), Ok(IoValue::Unit)));
        assert!(s.written.contains(&4));
        assert!(s.responded);
    }

    #[test]
    fn failed_close_keeps_descriptor() {
        let d = webserver_mstate();
        let s = d.update(d.init(), &Event::new(Caller::Ctx, IoCall::open("/temp/p"), Ok(IoValue::Fd(5))));
        let s = d.update(&s, &Event::new(Caller::Ctx, IoCall::Close(5), Err(ErrCode::Ebadf)));
        assert_eq!(s.ctx_opened, vec![5]);
    }

    #[test]
    fn init_abstracts_empty() {
        let d = webserver_mstate();
        assert!(d.abstracts(d.init(), &History::empty()));
        assert!(!d.abstracts(
            &WebState {
                responded: true,
                ..WebState::default()
            },
            &History::empty()
        ));
    }
}
