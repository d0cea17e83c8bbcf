use std::fmt;

use serde::{Deserialize, Serialize};

/// Descriptor numbers handed out by the simulated world.
pub type Fd = u32;

/// Which side of the boundary issued an operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Caller {
    Prog,
    Ctx,
}

impl fmt::Display for Caller {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Caller::Prog => "Prog",
            Caller::Ctx => "Ctx",
        })
    }
}

/// The IO operations of the signature. Reading the monitor state is not an
/// IO operation and never shows up here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IoOp {
    Openfile,
    Read,
    Write,
    Close,
    Socket,
    Setsockopt,
    Bind,
    Listen,
    Accept,
    Select,
    SetNonblock,
}

impl IoOp {
    pub const ALL: [IoOp; 11] = [
        IoOp::Openfile,
        IoOp::Read,
        IoOp::Write,
        IoOp::Close,
        IoOp::Socket,
        IoOp::Setsockopt,
        IoOp::Bind,
        IoOp::Listen,
        IoOp::Accept,
        IoOp::Select,
        IoOp::SetNonblock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IoOp::Openfile => "Openfile",
            IoOp::Read => "Read",
            IoOp::Write => "Write",
            IoOp::Close => "Close",
            IoOp::Socket => "Socket",
            IoOp::Setsockopt => "Setsockopt",
            IoOp::Bind => "Bind",
            IoOp::Listen => "Listen",
            IoOp::Accept => "Accept",
            IoOp::Select => "Select",
            IoOp::SetNonblock => "SetNonblock",
        }
    }

    pub fn from_name(name: &str) -> Option<IoOp> {
        IoOp::ALL.into_iter().find(|op| op.name() == name)
    }

    /// Shape of a successful result.
    pub fn result_kind(self) -> ValueKind {
        match self {
            IoOp::Openfile | IoOp::Socket | IoOp::Accept | IoOp::Select => ValueKind::Fd,
            IoOp::Read => ValueKind::Bytes,
            _ => ValueKind::Unit,
        }
    }
}

impl fmt::Display for IoOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OpenFlag {
    RdOnly,
    WrOnly,
    RdWr,
    Creat,
    Trunc,
    Append,
}

impl OpenFlag {
    fn name(self) -> &'static str {
        match self {
            OpenFlag::RdOnly => "O_RDONLY",
            OpenFlag::WrOnly => "O_WRONLY",
            OpenFlag::RdWr => "O_RDWR",
            OpenFlag::Creat => "O_CREAT",
            OpenFlag::Trunc => "O_TRUNC",
            OpenFlag::Append => "O_APPEND",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SockOpt {
    ReuseAddr,
}

/// An operation together with its argument.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IoCall {
    Openfile {
        path: String,
        flags: Vec<OpenFlag>,
        mode: u32,
    },
    Read(Fd),
    Write(Fd, Vec<u8>),
    Close(Fd),
    Socket,
    Setsockopt(Fd, SockOpt, bool),
    Bind(Fd, String, u16),
    Listen(Fd, u32),
    Accept(Fd),
    Select(Vec<Fd>),
    SetNonblock(Fd),
}

impl IoCall {
    /// Read-only open with mode 0, the form the context language produces.
    pub fn open(path: impl Into<String>) -> IoCall {
        IoCall::Openfile {
            path: path.into(),
            flags: vec![OpenFlag::RdOnly],
            mode: 0,
        }
    }

    pub fn op(&self) -> IoOp {
        match self {
            IoCall::Openfile { .. } => IoOp::Openfile,
            IoCall::Read(_) => IoOp::Read,
            IoCall::Write(..) => IoOp::Write,
            IoCall::Close(_) => IoOp::Close,
            IoCall::Socket => IoOp::Socket,
            IoCall::Setsockopt(..) => IoOp::Setsockopt,
            IoCall::Bind(..) => IoOp::Bind,
            IoCall::Listen(..) => IoOp::Listen,
            IoCall::Accept(_) => IoOp::Accept,
            IoCall::Select(_) => IoOp::Select,
            IoCall::SetNonblock(_) => IoOp::SetNonblock,
        }
    }

    /// The descriptor an operation acts on, if it acts on exactly one.
    pub fn target_fd(&self) -> Option<Fd> {
        match self {
            IoCall::Read(fd)
            | IoCall::Write(fd, _)
            | IoCall::Close(fd)
            | IoCall::Setsockopt(fd, ..)
            | IoCall::Bind(fd, ..)
            | IoCall::Listen(fd, _)
            | IoCall::Accept(fd)
            | IoCall::SetNonblock(fd) => Some(*fd),
            IoCall::Openfile { .. } | IoCall::Socket | IoCall::Select(_) => None,
        }
    }

    pub fn path(&self) -> Option<&str> {
        match self {
            IoCall::Openfile { path, .. } => Some(path),
            _ => None,
        }
    }
}

impl fmt::Display for IoCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.op())?;
        match self {
            IoCall::Openfile { path, flags, mode } => {
                let flags: Vec<_> = flags.iter().map(|fl| fl.name()).collect();
                write!(f, " {:?} [{}] {:#o}", path, flags.join(","), mode)
            }
            IoCall::Read(fd) | IoCall::Close(fd) | IoCall::Accept(fd) | IoCall::SetNonblock(fd) => {
                write!(f, " {fd}")
            }
            IoCall::Write(fd, bytes) => write!(f, " {fd} {}", quote(bytes)),
            IoCall::Socket => f.write_str(" ()"),
            IoCall::Setsockopt(fd, SockOpt::ReuseAddr, on) => write!(f, " {fd} SO_REUSEADDR {on}"),
            IoCall::Bind(fd, addr, port) => write!(f, " {fd} {addr:?} {port}"),
            IoCall::Listen(fd, backlog) => write!(f, " {fd} {backlog}"),
            IoCall::Select(fds) => {
                let fds: Vec<_> = fds.iter().map(|fd| fd.to_string()).collect();
                write!(f, " [{}]", fds.join(","))
            }
        }
    }
}

/// Successful results.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IoValue {
    Unit,
    Fd(Fd),
    Bytes(Vec<u8>),
}

impl IoValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            IoValue::Unit => ValueKind::Unit,
            IoValue::Fd(_) => ValueKind::Fd,
            IoValue::Bytes(_) => ValueKind::Bytes,
        }
    }
}

impl fmt::Display for IoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoValue::Unit => f.write_str("()"),
            IoValue::Fd(fd) => write!(f, "{fd}"),
            IoValue::Bytes(b) => f.write_str(&quote(b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Unit,
    Fd,
    Bytes,
}

/// Which enforcement mechanism produced a contract failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mechanism {
    Monitor,
    PreContract,
    PostContract,
    Import,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Monitor => "monitor",
            Mechanism::PreContract => "pre-contract",
            Mechanism::PostContract => "post-contract",
            Mechanism::Import => "import",
        })
    }
}

/// Diagnostic tag attached to a contract failure. It names the mechanism and
/// the check or operation that fired; it plays no part in enforcement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub mechanism: Mechanism,
    pub label: String,
}

impl Provenance {
    pub fn new(mechanism: Mechanism, label: impl Into<String>) -> Self {
        Provenance {
            mechanism,
            label: label.into(),
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.mechanism, self.label)
    }
}

/// The closed error enum. World errors travel in-band inside events;
/// `ContractFailure` only ever comes from the enforcement layer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrCode {
    ContractFailure(Option<Provenance>),
    Enoent,
    Ebadf,
    Einval,
    Eagain,
    Enotsock,
}

impl ErrCode {
    pub fn contract(mechanism: Mechanism, label: impl Into<String>) -> ErrCode {
        ErrCode::ContractFailure(Some(Provenance::new(mechanism, label)))
    }

    pub fn is_contract_failure(&self) -> bool {
        matches!(self, ErrCode::ContractFailure(_))
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        match self {
            ErrCode::ContractFailure(p) => p.as_ref(),
            _ => None,
        }
    }
}

impl fmt::Display for ErrCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrCode::ContractFailure(None) => f.write_str("Contract_failure"),
            ErrCode::ContractFailure(Some(p)) => write!(f, "Contract_failure({p})"),
            ErrCode::Enoent => f.write_str("ENOENT"),
            ErrCode::Ebadf => f.write_str("EBADF"),
            ErrCode::Einval => f.write_str("EINVAL"),
            ErrCode::Eagain => f.write_str("EAGAIN"),
            ErrCode::Enotsock => f.write_str("ENOTSOCK"),
        }
    }
}

pub type IoResult = Result<IoValue, ErrCode>;

/// A recorded IO operation: who asked, what was asked, what came back.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Event {
    pub caller: Caller,
    pub call: IoCall,
    pub result: IoResult,
}

impl Event {
    pub fn new(caller: Caller, call: IoCall, result: IoResult) -> Self {
        Event {
            caller,
            call,
            result,
        }
    }

    pub fn op(&self) -> IoOp {
        self.call.op()
    }

    pub fn succeeded(&self) -> bool {
        self.result.is_ok()
    }

    /// The result shape matches the operation and no contract failure was
    /// recorded (blocked calls never produce events).
    pub fn is_well_formed(&self) -> bool {
        match &self.result {
            Ok(v) => v.kind() == self.op().result_kind(),
            Err(e) => !e.is_contract_failure(),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} -> ", self.caller, self.call)?;
        match &self.result {
            Ok(v) => write!(f, "Inl {v}"),
            Err(e) => write!(f, "Inr {e}"),
        }
    }
}

/// Canonical byte rendering used by trace dumps: a double-quoted string with
/// printable ASCII kept and everything else escaped.
pub fn quote(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() + 2);
    out.push('"');
    for &b in bytes {
        match b {
            b'"' => out.push_str("\\\""),
            b'\\' => out.push_str("\\\\"),
            b'\n' => out.push_str("\\n"),
            b'\r' => out.push_str("\\r"),
            b'\t' => out.push_str("\\t"),
            0x20..=0x7e => out.push(b as char),
            _ => out.push_str(&format!("\\x{b:02x}")),
        }
    }
    out.push('"');
    out
}
