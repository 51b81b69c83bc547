//! Encounter detection, one-connection-per-slot arbitration, and
//! bandwidth-limited transfer execution.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::geometry::Position;
use crate::messages::{MessageId, NodeId};

/// Two nodes within range of each other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub node_a: NodeId,
    pub node_b: NodeId,
    pub started_at: f64,
    /// bits per second
    pub link_rate: u64,
}

impl Contact {
    /// Bytes the link can carry in one slot.
    pub fn slot_budget(&self, slot_duration: f64) -> u64 {
        (self.link_rate as f64 * slot_duration / 8.0).floor() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransferMode {
    /// Hand over a copy carrying `tickets`; the sender keeps the rest.
    Replicate { tickets: u32 },
    /// Hand over a one-ticket copy without spending any of the sender's
    /// tickets (mints one ticket).
    ExtraCopy,
    /// Hand over the sender's copy and delete it locally.
    Forward,
    /// Hand the message to its destination.
    Deliver,
}

/// One message transfer on a link. Threshold updates ride along and apply
/// only if the transfer completes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferAction {
    pub message: MessageId,
    pub from: NodeId,
    pub to: NodeId,
    pub mode: TransferMode,
    pub bytes: u64,
    pub new_threshold_time: Option<f64>,
    pub new_threshold_dist: Option<f64>,
}

impl TransferAction {
    pub fn new(message: MessageId, from: NodeId, to: NodeId, mode: TransferMode, bytes: u64) -> Self {
        Self {
            message,
            from,
            to,
            mode,
            bytes,
            new_threshold_time: None,
            new_threshold_dist: None,
        }
    }

    pub fn with_threshold_time(mut self, t: f64) -> Self {
        self.new_threshold_time = Some(t);
        self
    }

    pub fn with_threshold_dist(mut self, d: f64) -> Self {
        self.new_threshold_dist = Some(d);
        self
    }

    fn same_transfer(&self, f: &InFlight) -> bool {
        self.message == f.message && self.from == f.from && self.to == f.to
    }
}

/// A transfer cut off by the end of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InFlight {
    pub message: MessageId,
    pub from: NodeId,
    pub to: NodeId,
    pub sent: u64,
}

/// A contact together with the transfer it left half-finished, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub contact: Contact,
    pub in_flight: Option<InFlight>,
}

impl Link {
    pub fn new(contact: Contact) -> Self {
        Self {
            contact,
            in_flight: None,
        }
    }

    /// Sends `actions` in order against the remaining slot `budget` and
    /// returns those that completed. A pending in-flight transfer that is
    /// still wanted resumes first with its bytes already sent; one that is
    /// no longer wanted is abandoned. The first action that does not fit
    /// becomes the new in-flight transfer and ends the slot.
    pub fn transmit(&mut self, mut actions: Vec<TransferAction>, budget: &mut u64) -> Vec<TransferAction> {
        if *budget == 0 || actions.is_empty() {
            return Vec::new();
        }
        let mut credit = 0;
        if let Some(f) = self.in_flight.take() {
            if let Some(pos) = actions.iter().position(|a| a.same_transfer(&f)) {
                let resumed = actions.remove(pos);
                actions.insert(0, resumed);
                credit = f.sent;
            }
        }
        let mut done = Vec::new();
        for (i, action) in actions.into_iter().enumerate() {
            let already = if i == 0 { credit } else { 0 };
            let needed = action.bytes.saturating_sub(already);
            if needed <= *budget {
                *budget -= needed;
                done.push(action);
            } else {
                self.in_flight = Some(InFlight {
                    message: action.message,
                    from: action.from,
                    to: action.to,
                    sent: already + *budget,
                });
                *budget = 0;
                break;
            }
        }
        done
    }

    /// Sender of the pending transfer, if any.
    pub fn pending_sender(&self) -> Option<NodeId> {
        self.in_flight.map(|f| f.from)
    }
}

/// All unordered index pairs `(i, j)`, `i < j`, within `range` (inclusive).
pub fn detect_contacts(positions: &[Position], range: f64) -> Vec<(usize, usize)> {
    let r2 = range * range;
    let mut pairs = Vec::new();
    for i in 0..positions.len() {
        let pi = positions[i];
        for (j, pj) in positions.iter().enumerate().skip(i + 1) {
            let (dx, dy) = (pj.x - pi.x, pj.y - pi.y);
            if dx * dx + dy * dy <= r2 {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Random greedy matching: shuffle, then keep each pair whose endpoints are
/// both still free.
pub fn arbitrate_slots<R: Rng + ?Sized>(pairs: &[(usize, usize)], rng: &mut R) -> Vec<(usize, usize)> {
    let mut order = pairs.to_vec();
    order.shuffle(rng);
    let n = pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
    let mut busy = vec![false; n];
    let mut matched = Vec::new();
    for (a, b) in order {
        if !busy[a] && !busy[b] {
            busy[a] = true;
            busy[b] = true;
            matched.push((a, b));
        }
    }
    matched
}

/// Runs one slot of a fresh contact: actions complete in order while their
/// cumulative size fits in `link_rate * slot_duration / 8` bytes.
pub fn execute_transfers(contact: Contact, actions: Vec<TransferAction>, slot_duration: f64) -> Vec<TransferAction> {
    let mut budget = contact.slot_budget(slot_duration);
    Link::new(contact).transmit(actions, &mut budget)
}
