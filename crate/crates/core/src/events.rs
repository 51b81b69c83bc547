//! Append-only record of everything that happens to messages during a run.
//!
//! The text form is one event per line and parses back losslessly, so a
//! persisted log can be re-scored without re-running the simulation.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::messages::{MessageId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Created { id: MessageId, source: NodeId, destination: NodeId, tickets: u32 },
    Replicated { id: MessageId, from: NodeId, to: NodeId, tickets: u32 },
    /// One-ticket copy handed over without spending the sender's tickets.
    ExtraCopy { id: MessageId, from: NodeId, to: NodeId },
    Forwarded { id: MessageId, from: NodeId, to: NodeId },
    Delivered { id: MessageId, from: NodeId, to: NodeId, tickets: u32 },
    Expired { id: MessageId, node: NodeId, tickets: u32 },
    Evicted { id: MessageId, node: NodeId, tickets: u32 },
    Acked { id: MessageId, node: NodeId, tickets: u32 },
}

impl EventKind {
    pub fn message(&self) -> MessageId {
        match *self {
            EventKind::Created { id, .. }
            | EventKind::Replicated { id, .. }
            | EventKind::ExtraCopy { id, .. }
            | EventKind::Forwarded { id, .. }
            | EventKind::Delivered { id, .. }
            | EventKind::Expired { id, .. }
            | EventKind::Evicted { id, .. }
            | EventKind::Acked { id, .. } => id,
        }
    }

    /// Whether the event put bytes on a link.
    pub fn is_transmission(&self) -> bool {
        matches!(
            self,
            EventKind::Replicated { .. } | EventKind::ExtraCopy { .. } | EventKind::Forwarded { .. } | EventKind::Delivered { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.time;
        match self.kind {
            EventKind::Created { id, source, destination, tickets } => {
                write!(f, "{t} created {id} {source} {destination} {tickets}")
            }
            EventKind::Replicated { id, from, to, tickets } => write!(f, "{t} replicated {id} {from} {to} {tickets}"),
            EventKind::ExtraCopy { id, from, to } => write!(f, "{t} extra {id} {from} {to}"),
            EventKind::Forwarded { id, from, to } => write!(f, "{t} forwarded {id} {from} {to}"),
            EventKind::Delivered { id, from, to, tickets } => write!(f, "{t} delivered {id} {from} {to} {tickets}"),
            EventKind::Expired { id, node, tickets } => write!(f, "{t} expired {id} {node} {tickets}"),
            EventKind::Evicted { id, node, tickets } => write!(f, "{t} evicted {id} {node} {tickets}"),
            EventKind::Acked { id, node, tickets } => write!(f, "{t} acked {id} {node} {tickets}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct LogParseError {
    pub line: usize,
    pub msg: String,
}

fn parse_prefixed(s: &str, prefix: char) -> Option<u32> {
    s.strip_prefix(prefix)?.parse().ok()
}

impl FromStr for Event {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let f: Vec<&str> = s.split_whitespace().collect();
        let bad = || format!("malformed event `{s}`");
        if f.len() < 2 {
            return Err(bad());
        }
        let time: f64 = f[0].parse().map_err(|_| bad())?;
        let m = |i: usize| f.get(i).and_then(|x| parse_prefixed(x, 'm')).map(MessageId).ok_or_else(bad);
        let n = |i: usize| f.get(i).and_then(|x| parse_prefixed(x, 'n')).map(NodeId).ok_or_else(bad);
        let k = |i: usize| f.get(i).and_then(|x| x.parse::<u32>().ok()).ok_or_else(bad);
        let expect = |len: usize| if f.len() == len { Ok(()) } else { Err(bad()) };
        let kind = match f[1] {
            "created" => {
                expect(6)?;
                EventKind::Created { id: m(2)?, source: n(3)?, destination: n(4)?, tickets: k(5)? }
            }
            "replicated" => {
                expect(6)?;
                EventKind::Replicated { id: m(2)?, from: n(3)?, to: n(4)?, tickets: k(5)? }
            }
            "extra" => {
                expect(5)?;
                EventKind::ExtraCopy { id: m(2)?, from: n(3)?, to: n(4)? }
            }
            "forwarded" => {
                expect(5)?;
                EventKind::Forwarded { id: m(2)?, from: n(3)?, to: n(4)? }
            }
            "delivered" => {
                expect(6)?;
                EventKind::Delivered { id: m(2)?, from: n(3)?, to: n(4)?, tickets: k(5)? }
            }
            "expired" => {
                expect(5)?;
                EventKind::Expired { id: m(2)?, node: n(3)?, tickets: k(4)? }
            }
            "evicted" => {
                expect(5)?;
                EventKind::Evicted { id: m(2)?, node: n(3)?, tickets: k(4)? }
            }
            "acked" => {
                expect(5)?;
                EventKind::Acked { id: m(2)?, node: n(3)?, tickets: k(4)? }
            }
            _ => return Err(bad()),
        };
        Ok(Event { time, kind })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an event. Timestamps must not go backwards.
    pub fn push(&mut self, time: f64, kind: EventKind) {
        debug_assert!(self.events.last().is_none_or(|e| e.time <= time));
        self.events.push(Event { time, kind });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 32);
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LogParseError> {
        let mut log = EventLog::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: Event = line.parse().map_err(|msg| LogParseError { line: i + 1, msg })?;
            if log.events.last().is_some_and(|last| last.time > e.time) {
                return Err(LogParseError {
                    line: i + 1,
                    msg: "timestamp goes backwards".into(),
                });
            }
            log.events.push(e);
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kind_strategy() -> impl Strategy<Value = EventKind> {
        let id = (0u32..5000).prop_map(MessageId);
        let node = (0u32..300).prop_map(NodeId);
        prop_oneof![
            (id.clone(), node.clone(), node.clone(), 1u32..64).prop_map(|(id, source, destination, tickets)| EventKind::Created { id, source, destination, tickets }),
            (id.clone(), node.clone(), node.clone(), 1u32..64).prop_map(|(id, from, to, tickets)| EventKind::Replicated { id, from, to, tickets }),
            (id.clone(), node.clone(), node.clone()).prop_map(|(id, from, to)| EventKind::ExtraCopy { id, from, to }),
            (id.clone(), node.clone(), node.clone()).prop_map(|(id, from, to)| EventKind::Forwarded { id, from, to }),
            (id.clone(), node.clone(), node.clone(), 1u32..64).prop_map(|(id, from, to, tickets)| EventKind::Delivered { id, from, to, tickets }),
            (id.clone(), node.clone(), 1u32..64).prop_map(|(id, node, tickets)| EventKind::Expired { id, node, tickets }),
            (id.clone(), node.clone(), 1u32..64).prop_map(|(id, node, tickets)| EventKind::Evicted { id, node, tickets }),
            (id, node, 1u32..64).prop_map(|(id, node, tickets)| EventKind::Acked { id, node, tickets }),
        ]
    }

    proptest! {
        #[test]
        fn text_form_round_trips(steps in proptest::collection::vec((0u32..50, kind_strategy()), 0..60), slot in 0.1..3.0f64) {
            let mut log = EventLog::new();
            let mut t = 0u32;
            for (dt, kind) in steps {
                t += dt;
                log.push(t as f64 * slot, kind);
            }
            prop_assert_eq!(EventLog::from_text(&log.to_text()).unwrap(), log);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(EventLog::from_text("1 teleported m1 n2").unwrap_err().line, 1);
        assert!(EventLog::from_text("5 expired m1 n2 1\n4 expired m1 n2 1\n").is_err());
        assert!(EventLog::from_text("1 expired m1 n2").is_err());
    }
}
