use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::event::{Caller, ErrCode, Fd, IoCall, IoResult, IoValue, OpenFlag};

/// Descriptor number of the pre-opened console.
pub const STDOUT: Fd = 1;
const FIRST_FREE_FD: Fd = 3;

/// A scripted incoming connection: the peer's label and the bytes it sends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Connection {
    pub client_id: String,
    pub request: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Resource {
    Console,
    File {
        path: String,
        cursor: usize,
        readable: bool,
        writable: bool,
    },
    Socket {
        bound: bool,
        listening: bool,
    },
    Client {
        client_id: String,
        inbox: Option<Vec<u8>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Descriptor {
    owner: Caller,
    resource: Resource,
}

/// Deterministic stand-in for the operating system: a flat file map, a queue
/// of scripted connections and a descriptor table. Descriptors are never
/// reused, reads hand back everything pending, writes always complete.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct World {
    files: BTreeMap<String, Vec<u8>>,
    pending: VecDeque<Connection>,
    table: BTreeMap<Fd, Descriptor>,
    next_fd: Fd,
    console: Vec<u8>,
    responses: BTreeMap<String, Vec<Vec<u8>>>,
}

impl Default for World {
    fn default() -> Self {
        World::new()
    }
}

impl World {
    pub fn new() -> Self {
        let mut table = BTreeMap::new();
        table.insert(
            STDOUT,
            Descriptor {
                owner: Caller::Prog,
                resource: Resource::Console,
            },
        );
        World {
            files: BTreeMap::new(),
            pending: VecDeque::new(),
            table,
            next_fd: FIRST_FREE_FD,
            console: Vec::new(),
            responses: BTreeMap::new(),
        }
    }

    pub fn with_file(mut self, path: impl Into<String>, content: impl Into<Vec<u8>>) -> Self {
        self.files.insert(path.into(), content.into());
        self
    }

    pub fn with_connection(mut self, client_id: impl Into<String>, request: impl Into<Vec<u8>>) -> Self {
        self.pending.push_back(Connection {
            client_id: client_id.into(),
            request: request.into(),
        });
        self
    }

    pub fn file(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(Vec::as_slice)
    }

    pub fn files(&self) -> &BTreeMap<String, Vec<u8>> {
        &self.files
    }

    pub fn console(&self) -> &[u8] {
        &self.console
    }

    /// Everything written to each client, keyed by client id.
    pub fn responses(&self) -> &BTreeMap<String, Vec<Vec<u8>>> {
        &self.responses
    }

    pub fn pending_connections(&self) -> usize {
        self.pending.len()
    }

    pub fn is_open(&self, fd: Fd) -> bool {
        self.table.contains_key(&fd)
    }

    pub fn owner(&self, fd: Fd) -> Option<Caller> {
        self.table.get(&fd).map(|d| d.owner)
    }

    fn alloc(&mut self, owner: Caller, resource: Resource) -> Fd {
        let fd = self.next_fd;
        self.next_fd += 1;
        self.table.insert(fd, Descriptor { owner, resource });
        fd
    }

    fn is_ready(&self, fd: Fd) -> bool {
        match self.table.get(&fd).map(|d| &d.resource) {
            Some(Resource::Socket { listening: true, .. }) => !self.pending.is_empty(),
            Some(Resource::Client { inbox, .. }) => inbox.is_some(),
            _ => false,
        }
    }

    /// Executes one operation on behalf of `caller`.
    pub fn perform(&mut self, caller: Caller, call: &IoCall) -> IoResult {
        match call {
            IoCall::Openfile { path, flags, .. } => {
                let has = |f: OpenFlag| flags.contains(&f);
                if !self.files.contains_key(path) {
                    if !has(OpenFlag::Creat) {
                        return Err(ErrCode::Enoent);
                    }
                    self.files.insert(path.clone(), Vec::new());
                }
                if has(OpenFlag::Trunc) {
                    self.files.insert(path.clone(), Vec::new());
                }
                let writable = has(OpenFlag::WrOnly) || has(OpenFlag::RdWr);
                let readable = !has(OpenFlag::WrOnly);
                let fd = self.alloc(
                    caller,
                    Resource::File {
                        path: path.clone(),
                        cursor: 0,
                        readable,
                        writable,
                    },
                );
                Ok(IoValue::Fd(fd))
            }
            IoCall::Read(fd) => {
                let Some(d) = self.table.get_mut(fd) else {
                    return Err(ErrCode::Ebadf);
                };
                match &mut d.resource {
                    Resource::File {
                        path,
                        cursor,
                        readable,
                        ..
                    } => {
                        if !*readable {
                            return Err(ErrCode::Ebadf);
                        }
                        let content = self.files.get(path.as_str()).map(Vec::as_slice).unwrap_or(&[]);
                        let start = (*cursor).min(content.len());
                        *cursor = content.len();
                        Ok(IoValue::Bytes(content[start..].to_vec()))
                    }
                    Resource::Client { inbox, .. } => Ok(IoValue::Bytes(inbox.take().unwrap_or_default())),
                    Resource::Console | Resource::Socket { .. } => Err(ErrCode::Einval),
                }
            }
            IoCall::Write(fd, bytes) => {
                let Some(d) = self.table.get(fd) else {
                    return Err(ErrCode::Ebadf);
                };
                match &d.resource {
                    Resource::File { path, writable, .. } => {
                        if !*writable {
                            return Err(ErrCode::Ebadf);
                        }
                        self.files.entry(path.clone()).or_default().extend_from_slice(bytes);
                        Ok(IoValue::Unit)
                    }
                    Resource::Client { client_id, .. } => {
                        self.responses.entry(client_id.clone()).or_default().push(bytes.clone());
                        Ok(IoValue::Unit)
                    }
                    Resource::Console => {
                        self.console.extend_from_slice(bytes);
                        Ok(IoValue::Unit)
                    }
                    Resource::Socket { .. } => Err(ErrCode::Einval),
                }
            }
            IoCall::Close(fd) => match self.table.remove(fd) {
                Some(_) => Ok(IoValue::Unit),
                None => Err(ErrCode::Ebadf),
            },
            IoCall::Socket => Ok(IoValue::Fd(self.alloc(
                caller,
                Resource::Socket {
                    bound: false,
                    listening: false,
                },
            ))),
            IoCall::Setsockopt(fd, ..) => match self.table.get(fd).map(|d| &d.resource) {
                None => Err(ErrCode::Ebadf),
                Some(Resource::Socket { .. }) => Ok(IoValue::Unit),
                Some(_) => Err(ErrCode::Enotsock),
            },
            IoCall::Bind(fd, ..) => match self.table.get_mut(fd).map(|d| &mut d.resource) {
                None => Err(ErrCode::Ebadf),
                Some(Resource::Socket { bound, .. }) => {
                    *bound = true;
                    Ok(IoValue::Unit)
                }
                Some(_) => Err(ErrCode::Enotsock),
            },
            IoCall::Listen(fd, _) => match self.table.get_mut(fd).map(|d| &mut d.resource) {
                None => Err(ErrCode::Ebadf),
                Some(Resource::Socket { bound: false, .. }) => Err(ErrCode::Einval),
                Some(Resource::Socket { listening, .. }) => {
                    *listening = true;
                    Ok(IoValue::Unit)
                }
                Some(_) => Err(ErrCode::Enotsock),
            },
            IoCall::Accept(fd) => match self.table.get(fd).map(|d| &d.resource) {
                None => Err(ErrCode::Ebadf),
                Some(Resource::Socket { listening: false, .. }) => Err(ErrCode::Einval),
                Some(Resource::Socket { listening: true, .. }) => match self.pending.pop_front() {
                    Some(conn) => Ok(IoValue::Fd(self.alloc(
                        caller,
                        Resource::Client {
                            client_id: conn.client_id,
                            inbox: Some(conn.request),
                        },
                    ))),
                    None => Err(ErrCode::Eagain),
                },
                Some(_) => Err(ErrCode::Enotsock),
            },
            IoCall::Select(fds) => {
                if fds.iter().any(|fd| !self.table.contains_key(fd)) {
                    return Err(ErrCode::Ebadf);
                }
                let mut sorted = fds.clone();
                sorted.sort_unstable();
                sorted
                    .into_iter()
                    .find(|fd| self.is_ready(*fd))
                    .map(IoValue::Fd)
                    .ok_or(ErrCode::Eagain)
            }
            IoCall::SetNonblock(fd) => {
                if self.table.contains_key(fd) {
                    Ok(IoValue::Unit)
                } else {
                    Err(ErrCode::Ebadf)
                }
            }
        }
    }
}
