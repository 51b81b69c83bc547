//! Shared fixtures for the criterion benchmarks under `benches/`.

use std::collections::BTreeMap;

use geodtn::routing::{EncounterContext, NodeView};
use geodtn::{AckLedger, Buffer, EncounterSet, MessageCopy, MessageId, NodeId, Position, Velocity};

pub const DEST: NodeId = NodeId(10_000);

/// A carrier holding `messages` copies and a peer that has met the
/// destination, both moving.
pub struct Encounter {
    pub carrier_buf: Buffer,
    pub peer_buf: Buffer,
    pub met: EncounterSet,
    pub none: EncounterSet,
    pub acks: AckLedger,
    pub dests: BTreeMap<NodeId, Position>,
}

impl Encounter {
    pub fn new(messages: u32) -> Self {
        let mut carrier_buf = Buffer::new(u64::MAX);
        for i in 0..messages {
            let mut c = MessageCopy::new(MessageId(i), NodeId(0), DEST, 1000, i as f64, 1200.0, 1 + i % 8);
            if i % 3 != 0 {
                c.threshold_time = Some(50.0 + (i % 17) as f64 * 20.0);
                c.threshold_dist = Some(100.0 + (i % 5) as f64 * 40.0);
            }
            carrier_buf.insert(c).expect("unbounded buffer");
        }
        let mut met = EncounterSet::new();
        met.record(DEST);
        Self {
            carrier_buf,
            peer_buf: Buffer::new(u64::MAX),
            met,
            none: EncounterSet::new(),
            acks: AckLedger::new(),
            dests: BTreeMap::from([(DEST, Position::new(500.0, 500.0))]),
        }
    }

    pub fn ctx(&self, now: f64) -> EncounterContext<'_> {
        EncounterContext {
            carrier: NodeView {
                id: NodeId(1),
                position: Position::new(200.0, 300.0),
                velocity: Velocity::new(-3.0, 4.0),
                encountered: &self.none,
                acks: &self.acks,
                buffer: &self.carrier_buf,
            },
            peer: NodeView {
                id: NodeId(2),
                position: Position::new(205.0, 302.0),
                velocity: Velocity::new(4.0, 3.0),
                encountered: &self.met,
                acks: &self.acks,
                buffer: &self.peer_buf,
            },
            destinations: &self.dests,
            now,
            range: 10.0,
            window: 5.0,
        }
    }
}

/// Deterministic scatter of `n` points over a square of side `side`.
pub fn scatter(n: usize, side: f64) -> Vec<Position> {
    let mut x = 0x9e37_79b9_7f4a_7c15u64;
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x >> 11) as f64 / (1u64 << 53) as f64 * side
    };
    (0..n).map(|_| Position::new(next(), next())).collect()
}
