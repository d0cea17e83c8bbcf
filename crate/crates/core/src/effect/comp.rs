use super::event::{Caller, Fd, IoCall, IoResult, OpenFlag, Provenance, SockOpt};

type Cont<S, T, A> = Box<dyn FnOnce(T) -> Comp<S, A> + Send>;

pub(crate) enum Node<S, A> {
    Return(A),
    Io {
        caller: Caller,
        call: IoCall,
        mediated: bool,
        cont: Cont<S, IoResult, A>,
    },
    GetMState(Cont<S, S, A>),
    Note(Provenance, Box<dyn FnOnce() -> Comp<S, A> + Send>),
}

/// A computation tree over the IO signature, parameterised by the monitor
/// state type `S` it may observe and the value `A` it returns.
///
/// Only [`ret`](Comp::ret), [`bind`](Comp::bind) and [`map`](Comp::map) are
/// public. IO nodes come from capability handles ([`ProgIo`] for program
/// code, `SecureIo` for contexts); reading the monitor state is reserved to
/// the enforcement layer.
pub struct Comp<S, A>(pub(crate) Node<S, A>);

impl<S: 'static, A: 'static> Comp<S, A> {
    pub fn ret(a: A) -> Self {
        Comp(Node::Return(a))
    }

    pub fn bind<B: 'static>(self, f: impl FnOnce(A) -> Comp<S, B> + Send + 'static) -> Comp<S, B> {
        match self.0 {
            Node::Return(a) => f(a),
            Node::Io {
                caller,
                call,
                mediated,
                cont,
            } => Comp(Node::Io {
                caller,
                call,
                mediated,
                cont: Box::new(move |r| cont(r).bind(f)),
            }),
            Node::GetMState(cont) => Comp(Node::GetMState(Box::new(move |s| cont(s).bind(f)))),
            Node::Note(p, next) => Comp(Node::Note(p, Box::new(move || next().bind(f)))),
        }
    }

    pub fn map<B: Send + 'static>(self, f: impl FnOnce(A) -> B + Send + 'static) -> Comp<S, B> {
        self.bind(move |a| Comp::ret(f(a)))
    }

    /// Runs `self`, discards its value, then runs `next`.
    pub fn then<B: Send + 'static>(self, next: Comp<S, B>) -> Comp<S, B>
    where
        S: Send,
    {
        self.bind(move |_| next)
    }

    /// The value of a computation that performs no operations.
    pub fn as_return(&self) -> Option<&A> {
        match &self.0 {
            Node::Return(a) => Some(a),
            _ => None,
        }
    }

    pub(crate) fn call_io(caller: Caller, call: IoCall, mediated: bool) -> Comp<S, IoResult> {
        Comp(Node::Io {
            caller,
            call,
            mediated,
            cont: Box::new(|r| Comp::ret(r)),
        })
    }

    pub(crate) fn note(p: Provenance) -> Comp<S, ()> {
        Comp(Node::Note(p, Box::new(|| Comp::ret(()))))
    }
}

impl<S: 'static> Comp<S, S> {
    pub(crate) fn get_mstate() -> Comp<S, S> {
        Comp(Node::GetMState(Box::new(|s| Comp::ret(s))))
    }
}

/// Program-side IO capability. Every operation it builds is tagged `Prog`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProgIo(());

impl ProgIo {
    pub fn new() -> Self {
        ProgIo(())
    }

    pub fn call<S: 'static>(&self, call: IoCall) -> Comp<S, IoResult> {
        Comp::<S, IoResult>::call_io(Caller::Prog, call, false)
    }

    pub fn openfile<S: 'static>(&self, path: &str, flags: &[OpenFlag], mode: u32) -> Comp<S, IoResult> {
        self.call(IoCall::Openfile {
            path: path.to_string(),
            flags: flags.to_vec(),
            mode,
        })
    }

    pub fn read<S: 'static>(&self, fd: Fd) -> Comp<S, IoResult> {
        self.call(IoCall::Read(fd))
    }

    pub fn write<S: 'static>(&self, fd: Fd, bytes: Vec<u8>) -> Comp<S, IoResult> {
        self.call(IoCall::Write(fd, bytes))
    }

    pub fn close<S: 'static>(&self, fd: Fd) -> Comp<S, IoResult> {
        self.call(IoCall::Close(fd))
    }

    pub fn socket<S: 'static>(&self) -> Comp<S, IoResult> {
        self.call(IoCall::Socket)
    }

    pub fn setsockopt<S: 'static>(&self, fd: Fd, opt: SockOpt, on: bool) -> Comp<S, IoResult> {
        self.call(IoCall::Setsockopt(fd, opt, on))
    }

    pub fn bind_addr<S: 'static>(&self, fd: Fd, addr: &str, port: u16) -> Comp<S, IoResult> {
        self.call(IoCall::Bind(fd, addr.to_string(), port))
    }

    pub fn listen<S: 'static>(&self, fd: Fd, backlog: u32) -> Comp<S, IoResult> {
        self.call(IoCall::Listen(fd, backlog))
    }

    pub fn accept<S: 'static>(&self, fd: Fd) -> Comp<S, IoResult> {
        self.call(IoCall::Accept(fd))
    }

    pub fn select<S: 'static>(&self, fds: Vec<Fd>) -> Comp<S, IoResult> {
        self.call(IoCall::Select(fds))
    }

    pub fn set_nonblock<S: 'static>(&self, fd: Fd) -> Comp<S, IoResult> {
        self.call(IoCall::SetNonblock(fd))
    }
}
