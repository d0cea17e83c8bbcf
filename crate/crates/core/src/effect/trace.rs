use std::fmt;

use serde::{Deserialize, Serialize};

use super::event::Event;

/// A local trace: the events one computation produced, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Trace(Vec<Event>);

impl Trace {
    pub fn new() -> Self {
        Trace(Vec::new())
    }

    pub fn push(&mut self, e: Event) {
        self.0.push(e);
    }

    pub fn events(&self) -> &[Event] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.0
    }

    /// `self ++ other`, both chronological.
    pub fn concat(&self, other: &Trace) -> Trace {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Trace(v)
    }

    pub fn split_at(&self, mid: usize) -> (Trace, Trace) {
        let (a, b) = self.0.split_at(mid);
        (Trace(a.to_vec()), Trace(b.to_vec()))
    }

    /// One line per event in the canonical `CALLER OP ARG -> RESULT` form.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.0 {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}

impl From<Vec<Event>> for Trace {
    fn from(v: Vec<Event>) -> Self {
        Trace(v)
    }
}

impl FromIterator<Event> for Trace {
    fn from_iter<I: IntoIterator<Item = Event>>(iter: I) -> Self {
        Trace(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a Event;
    type IntoIter = std::slice::Iter<'a, Event>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// The history a predicate is evaluated against. Semantically it is read
/// most-recent-first (`e :: h` prepends); the events are stored oldest first
/// so that prepending is a push.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct History(Vec<Event>);

impl History {
    pub fn empty() -> Self {
        History(Vec::new())
    }

    /// Builds a history whose most recent event is the first element.
    pub fn from_recent_first(events: Vec<Event>) -> Self {
        let mut v = events;
        v.reverse();
        History(v)
    }

    /// Builds a history from events listed oldest first.
    pub fn from_chronological(events: Vec<Event>) -> Self {
        History(events)
    }

    /// `e :: h`
    pub fn push(&mut self, e: Event) {
        self.0.push(e);
    }

    /// `e :: h` without mutating.
    pub fn cons(&self, e: Event) -> History {
        let mut h = self.clone();
        h.push(e);
        h
    }

    /// `reverse(lt) ++ h`
    pub fn extended(&self, lt: &Trace) -> History {
        let mut v = self.0.clone();
        v.extend(lt.iter().cloned());
        History(v)
    }

    pub fn latest(&self) -> Option<&Event> {
        self.0.last()
    }

    pub fn recent_first(&self) -> impl Iterator<Item = &Event> {
        self.0.iter().rev()
    }

    pub fn to_recent_first(&self) -> Vec<Event> {
        self.0.iter().rev().cloned().collect()
    }

    pub fn chronological(&self) -> &[Event] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The events recorded after `earlier`, which must be a prefix of `self`.
    pub fn since(&self, earlier: &History) -> Option<Trace> {
        if self.0.len() < earlier.0.len() || self.0[..earlier.0.len()] != earlier.0[..] {
            return None;
        }
        Some(Trace(self.0[earlier.0.len()..].to_vec()))
    }
}
