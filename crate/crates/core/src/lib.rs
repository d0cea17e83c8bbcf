pub mod contracts;
pub mod ctxdsl;
pub mod demos;
pub mod effect;
pub mod gen;
pub mod linker;
pub mod monitor;
pub mod traces;
