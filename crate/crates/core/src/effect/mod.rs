//! Computations over the IO signature, the events they record, and the
//! deterministic interpreter that runs them against a simulated world.

mod comp;
mod event;
mod interp;
mod trace;
mod world;

pub use comp::{Comp, ProgIo};
pub use event::{
    quote, Caller, ErrCode, Event, Fd, IoCall, IoOp, IoResult, IoValue, Mechanism, OpenFlag, Provenance, SockOpt,
    ValueKind,
};
pub use interp::{interpret, Audit, Machine, Run};
pub use trace::{History, Trace};
pub use world::{Connection, World, STDOUT};
