//! Message copies and the per-node state that holds them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MessageError {
    #[error("a copy holding {0} ticket(s) cannot be split")]
    NotSplittable(u32),
    #[error("threshold sync between different messages ({0} vs {1})")]
    MismatchedMessage(MessageId, MessageId),
    #[error("message {0} has expired")]
    Expired(MessageId),
    #[error("buffer already holds a copy of message {0}")]
    Duplicate(MessageId),
    #[error("copy of {size} bytes does not fit ({free} bytes free)")]
    Overflow { size: u64, free: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageId(pub u32);

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

/// One node's copy of a message.
///
/// `threshold_time` (best intersect time seen) and `threshold_dist` (best
/// projected distance seen) start unset, which compares as +infinity, and
/// only ever decrease.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageCopy {
    pub id: MessageId,
    pub source: NodeId,
    pub destination: NodeId,
    pub size: u64,
    pub created_at: f64,
    pub ttl_initial: f64,
    pub tickets: u32,
    pub threshold_time: Option<f64>,
    pub threshold_dist: Option<f64>,
    pub hop_trace: Vec<NodeId>,
}

impl MessageCopy {
    pub fn new(
        id: MessageId,
        source: NodeId,
        destination: NodeId,
        size: u64,
        created_at: f64,
        ttl_initial: f64,
        tickets: u32,
    ) -> Self {
        Self {
            id,
            source,
            destination,
            size,
            created_at,
            ttl_initial,
            tickets,
            threshold_time: None,
            threshold_dist: None,
            hop_trace: vec![source],
        }
    }

    pub fn remaining_ttl(&self, now: f64) -> f64 {
        remaining_ttl(self, now)
    }

    pub fn is_expired(&self, now: f64) -> bool {
        now - self.created_at >= self.ttl_initial
    }

    /// Threshold time with unset mapped to +infinity.
    pub fn time_threshold(&self) -> f64 {
        self.threshold_time.unwrap_or(f64::INFINITY)
    }

    pub fn dist_threshold(&self) -> f64 {
        self.threshold_dist.unwrap_or(f64::INFINITY)
    }

    /// Lowers `threshold_time` to `value` if that is an improvement.
    pub fn lower_threshold_time(&mut self, value: f64) {
        if value < self.time_threshold() {
            self.threshold_time = Some(value);
        }
    }

    pub fn lower_threshold_dist(&mut self, value: f64) {
        if value < self.dist_threshold() {
            self.threshold_dist = Some(value);
        }
    }
}

/// Binary ticket split: `(give, keep)` with `give = floor(C/2)`.
pub fn split_tickets(tickets: u32) -> Result<(u32, u32), MessageError> {
    if tickets <= 1 {
        return Err(MessageError::NotSplittable(tickets));
    }
    let give = tickets / 2;
    Ok((give, tickets - give))
}

/// `T_ini - T_ela`, floored at zero.
pub fn remaining_ttl(copy: &MessageCopy, now: f64) -> f64 {
    (copy.ttl_initial - (now - copy.created_at)).max(0.0)
}

/// Both copies take the smaller of each threshold pair.
pub fn sync_thresholds(a: &mut MessageCopy, b: &mut MessageCopy) -> Result<(), MessageError> {
    if a.id != b.id {
        return Err(MessageError::MismatchedMessage(a.id, b.id));
    }
    let time = min_threshold(a.threshold_time, b.threshold_time);
    let dist = min_threshold(a.threshold_dist, b.threshold_dist);
    a.threshold_time = time;
    b.threshold_time = time;
    a.threshold_dist = dist;
    b.threshold_dist = dist;
    Ok(())
}

fn min_threshold(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Delivery potential of a copy within its remaining lifetime:
/// `1 - (1 - p)^C` with `p = (rem - V_T) / rem` clamped to `[0, 1]`.
/// An unset time threshold gives `p = 0`.
pub fn message_utility(copy: &MessageCopy, now: f64) -> Result<f64, MessageError> {
    let rem = remaining_ttl(copy, now);
    if rem <= 0.0 {
        return Err(MessageError::Expired(copy.id));
    }
    let p = match copy.threshold_time {
        Some(vt) => ((rem - vt) / rem).clamp(0.0, 1.0),
        None => 0.0,
    };
    Ok(1.0 - (1.0 - p).powi(copy.tickets as i32))
}

/// Which copy a full buffer gives up first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvictionPolicy {
    /// Lowest message utility first, oldest first among ties.
    LowestUtility,
    /// Oldest creation time first.
    OldestFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Buffer {
    copies: BTreeMap<MessageId, MessageCopy>,
    capacity: u64,
    used: u64,
}

impl Buffer {
    pub fn new(capacity: u64) -> Self {
        Self {
            copies: BTreeMap::new(),
            capacity,
            used: 0,
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn free(&self) -> u64 {
        self.capacity - self.used
    }

    pub fn len(&self) -> usize {
        self.copies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }

    pub fn contains(&self, id: MessageId) -> bool {
        self.copies.contains_key(&id)
    }

    pub fn get(&self, id: MessageId) -> Option<&MessageCopy> {
        self.copies.get(&id)
    }

    pub fn get_mut(&mut self, id: MessageId) -> Option<&mut MessageCopy> {
        self.copies.get_mut(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MessageCopy> {
        self.copies.values()
    }

    pub fn insert(&mut self, copy: MessageCopy) -> Result<(), MessageError> {
        if self.copies.contains_key(&copy.id) {
            return Err(MessageError::Duplicate(copy.id));
        }
        if copy.size > self.free() {
            return Err(MessageError::Overflow {
                size: copy.size,
                free: self.free(),
            });
        }
        self.used += copy.size;
        self.copies.insert(copy.id, copy);
        Ok(())
    }

    pub fn remove(&mut self, id: MessageId) -> Option<MessageCopy> {
        let copy = self.copies.remove(&id)?;
        self.used -= copy.size;
        Some(copy)
    }

    /// Removes and returns every copy matching `pred`, in id order.
    pub fn drain_where(&mut self, mut pred: impl FnMut(&MessageCopy) -> bool) -> Vec<MessageCopy> {
        let ids: Vec<MessageId> = self.copies.values().filter(|c| pred(c)).map(|c| c.id).collect();
        ids.into_iter().filter_map(|id| self.remove(id)).collect()
    }
}

/// Frees space for an incoming copy of `incoming_size` bytes. Returns the
/// evicted copies in eviction order.
pub fn evict_for(
    buffer: &mut Buffer,
    incoming_size: u64,
    now: f64,
    policy: EvictionPolicy,
) -> Vec<MessageCopy> {
    if buffer.free() >= incoming_size {
        return Vec::new();
    }
    let mut order: Vec<(f64, f64, MessageId)> = buffer
        .iter()
        .map(|c| {
            let key = match policy {
                EvictionPolicy::LowestUtility => message_utility(c, now).unwrap_or(0.0),
                EvictionPolicy::OldestFirst => 0.0,
            };
            (key, c.created_at, c.id)
        })
        .collect();
    order.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut evicted = Vec::new();
    for (_, _, id) in order {
        if buffer.free() >= incoming_size {
            break;
        }
        evicted.extend(buffer.remove(id));
    }
    evicted
}

/// Ids of messages known to have reached their destination.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AckLedger {
    delivered: BTreeSet<MessageId>,
}

impl AckLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: MessageId) -> bool {
        self.delivered.insert(id)
    }

    pub fn contains(&self, id: MessageId) -> bool {
        self.delivered.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.delivered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delivered.is_empty()
    }

    /// Absorbs every id `other` knows; returns whether anything was new.
    pub fn merge(&mut self, other: &AckLedger) -> bool {
        let before = self.delivered.len();
        self.delivered.extend(other.delivered.iter().copied());
        self.delivered.len() != before
    }

    pub fn iter(&self) -> impl Iterator<Item = MessageId> + '_ {
        self.delivered.iter().copied()
    }
}

/// Drops every buffered copy whose id is in the ledger.
pub fn apply_acks(buffer: &mut Buffer, ledger: &AckLedger) -> Vec<MessageCopy> {
    buffer.drain_where(|c| ledger.contains(c.id))
}

/// Destinations a node has ever been in contact with.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncounterSet {
    met: BTreeSet<NodeId>,
}

impl EncounterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, destination: NodeId) -> bool {
        self.met.insert(destination)
    }

    pub fn contains(&self, destination: NodeId) -> bool {
        self.met.contains(&destination)
    }

    pub fn len(&self) -> usize {
        self.met.len()
    }

    pub fn is_empty(&self) -> bool {
        self.met.is_empty()
    }
}
