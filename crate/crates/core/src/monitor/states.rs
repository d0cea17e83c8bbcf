use super::MStateDesc;
use crate::effect::{Event, History};

/// The state is the whole history.
pub fn full_trace_mstate() -> MStateDesc<History> {
    MStateDesc::new("full-trace", History::empty(), |s: &History, e: &Event| s.cons(e.clone()), |s, h| s == h)
}

/// The state is the most recent event, if any.
pub fn last_event_mstate() -> MStateDesc<Option<Event>> {
    MStateDesc::new(
        "last-event",
        None,
        |_: &Option<Event>, e: &Event| Some(e.clone()),
        |s, h| s.as_ref() == h.latest(),
    )
}

/// No state at all; suits policies that ignore the past.
pub fn stateless_mstate() -> MStateDesc<()> {
    MStateDesc::new("stateless", (), |_: &(), _: &Event| (), |_, _| true)
}
